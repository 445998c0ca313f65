#include "rb/model/model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"

namespace rb::model {

using num::Parameter;
using num::Tensor;
using num::Var;

std::string to_string(HeadKind h) { return h == HeadKind::Mpp ? "mpp" : "nmsp"; }

HeadKind head_from_string(const std::string& s) {
  if (s == "mpp") return HeadKind::Mpp;
  if (s == "nmsp") return HeadKind::Nmsp;
  throw ConfigError("unknown head '" + s + "' (expected mpp or nmsp)");
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw ConfigError(std::string("model config: ") + what + " must be positive");
  };
  positive(n_layers, "n_layers");
  positive(dim, "dim");
  positive(n_heads, "n_heads");
  positive(ff_width, "ff_width");
  positive(vocab_size, "vocab_size");
  positive(n_positions, "n_positions");
  positive(stat_input_width, "stat_input_width");
  positive(n_stats, "n_stats");
  positive(seq_len, "seq_len");
  if (use_team_embeddings) positive(n_teams, "n_teams");
  if (mlp_hidden_layers < 0) throw ConfigError("model config: mlp_hidden_layers must be >= 0");
  if (dim % n_heads != 0) {
    throw ConfigError("model config: dim " + std::to_string(dim) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
}

ModelConfig make_config(int n_layers, int dim, int vocab_size, int n_teams) {
  ModelConfig c;
  c.n_layers = n_layers;
  c.dim = dim;
  c.n_heads = std::max(1, dim / 16);
  c.ff_width = 4 * dim;
  c.vocab_size = vocab_size;
  c.n_teams = n_teams;
  return c;
}

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["n_layers"] = c.n_layers;
  j["dim"] = c.dim;
  j["n_heads"] = c.n_heads;
  j["ff_width"] = c.ff_width;
  j["vocab_size"] = c.vocab_size;
  j["n_positions"] = c.n_positions;
  j["n_teams"] = c.n_teams;
  j["stat_input_width"] = c.stat_input_width;
  j["use_team_embeddings"] = c.use_team_embeddings;
  j["head"] = to_string(c.head);
  j["n_stats"] = c.n_stats;
  j["seq_len"] = c.seq_len;
  j["mlp_hidden_layers"] = c.mlp_hidden_layers;
  return nlohmann::json(j);
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.n_layers = j.at("n_layers").get<int>();
    c.dim = j.at("dim").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.ff_width = j.at("ff_width").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.n_positions = j.at("n_positions").get<int>();
    c.n_teams = j.at("n_teams").get<int>();
    c.stat_input_width = j.at("stat_input_width").get<int>();
    c.use_team_embeddings = j.at("use_team_embeddings").get<bool>();
    c.head = head_from_string(j.at("head").get<std::string>());
    c.n_stats = j.at("n_stats").get<int>();
    c.seq_len = j.at("seq_len").get<int>();
    c.mlp_hidden_layers = j.at("mlp_hidden_layers").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t ArraySpec::size() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::vector<std::size_t> mlp_widths(std::size_t in, std::size_t hidden, int n_hidden, std::size_t out) {
  std::vector<std::size_t> w{in};
  for (int i = 0; i < n_hidden; ++i) w.push_back(hidden);
  w.push_back(out);
  return w;
}

std::vector<std::size_t> stat_widths(const ModelConfig& c) {
  return mlp_widths(sz(c.stat_input_width), sz(c.dim), c.mlp_hidden_layers, sz(c.dim));
}

std::vector<std::size_t> head_widths(const ModelConfig& c) {
  if (c.head == HeadKind::Mpp) return mlp_widths(sz(c.dim), sz(c.dim), c.mlp_hidden_layers, sz(c.vocab_size));
  return mlp_widths(sz(c.seq_len) * sz(c.dim), sz(c.dim), c.mlp_hidden_layers, 2 * sz(c.n_stats));
}

void mlp_specs(std::vector<ArraySpec>& out, const std::string& prefix, const std::vector<std::size_t>& widths) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string p = prefix + "." + std::to_string(i);
    out.push_back({p + ".w", {widths[i], widths[i + 1]}});
    out.push_back({p + ".b", {1, widths[i + 1]}});
  }
}

}  // namespace

std::vector<ArraySpec> parameter_specs(const ModelConfig& c) {
  c.validate();
  const std::size_t d = sz(c.dim);
  std::vector<ArraySpec> out;
  out.push_back({"player_table", {sz(c.vocab_size), d}});
  out.push_back({"position_table", {sz(c.n_positions), d}});
  if (c.use_team_embeddings) out.push_back({"team_table", {sz(c.n_teams), d}});
  mlp_specs(out, "stat_mlp", stat_widths(c));
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l) + ".";
    for (const char* m : {"q", "k", "v", "o"}) {
      out.push_back({p + m + ".w", {d, d}});
      out.push_back({p + m + ".b", {1, d}});
    }
    out.push_back({p + "ln1.gain", {1, d}});
    out.push_back({p + "ln1.bias", {1, d}});
    out.push_back({p + "ff1.w", {d, sz(c.ff_width)}});
    out.push_back({p + "ff1.b", {1, sz(c.ff_width)}});
    out.push_back({p + "ff2.w", {sz(c.ff_width), d}});
    out.push_back({p + "ff2.b", {1, d}});
    out.push_back({p + "ln2.gain", {1, d}});
    out.push_back({p + "ln2.bias", {1, d}});
  }
  mlp_specs(out, "head", head_widths(c));
  return out;
}

std::size_t parameter_count(const ModelConfig& c) {
  std::size_t n = 0;
  for (const auto& s : parameter_specs(c)) n += s.size();
  return n;
}

template <class T>
Normalizers<T> Normalizers<T>::identity(const ModelConfig& c) {
  Normalizers n;
  n.input_shift = Tensor<T>(1, sz(c.stat_input_width));
  n.input_scale = Tensor<T>::filled(1, sz(c.stat_input_width), T(1));
  n.output_shift = Tensor<T>(1, 2 * sz(c.n_stats));
  n.output_scale = Tensor<T>::filled(1, 2 * sz(c.n_stats), T(1));
  return n;
}

namespace {

// Applies f to every trainable array of `p` in parameter_specs() order.
template <class P, class F>
void visit(P& p, F&& f) {
  f(p.player_table);
  f(p.position_table);
  if (p.config.use_team_embeddings) f(p.team_table);
  for (auto& l : p.stat_mlp) {
    f(l.w);
    f(l.b);
  }
  for (auto& e : p.layers) {
    for (auto* lin : {&e.q, &e.k, &e.v, &e.o}) {
      f(lin->w);
      f(lin->b);
    }
    f(e.ln1_gain);
    f(e.ln1_bias);
    f(e.ff1.w);
    f(e.ff1.b);
    f(e.ff2.w);
    f(e.ff2.b);
    f(e.ln2_gain);
    f(e.ln2_bias);
  }
  for (auto& l : p.head) {
    f(l.w);
    f(l.b);
  }
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <class T>
Tensor<T> init_array(const ArraySpec& spec, std::uint64_t seed) {
  Tensor<T> t(spec.shape);
  if (ends_with(spec.name, ".gain")) {
    t.fill(T(1));
  } else if (!ends_with(spec.name, ".b") && !ends_with(spec.name, ".bias")) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
    Rng rng(derive_seed(seed, spec.name));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  return t;
}

// Rebuilds the structure of `p` from its config and assigns arrays from specs.
template <class T>
void allocate(ModelParams<T>& p) {
  const ModelConfig& c = p.config;
  p.stat_mlp.assign(stat_widths(c).size() - 1, {});
  p.layers.assign(sz(c.n_layers), {});
  p.head.assign(head_widths(c).size() - 1, {});
  if (!c.use_team_embeddings) p.team_table = {};
}

template <class T>
void assign_from(ModelParams<T>& p, const std::vector<ArraySpec>& specs,
                 const std::function<Tensor<T>(const ArraySpec&)>& make,
                 const std::function<bool(const std::string&)>& select) {
  std::size_t k = 0;
  visit(p, [&](Parameter<T>& param) {
    const ArraySpec& s = specs.at(k++);
    if (select(s.name)) param = Parameter<T>(s.name, make(s));
  });
  if (k != specs.size()) throw IntegrityError("model: parameter layout disagrees with its config");
}

}  // namespace

template <class T>
void ModelParams<T>::for_each(const std::function<void(Parameter<T>&)>& f) {
  visit(*this, f);
}

template <class T>
void ModelParams<T>::for_each(const std::function<void(const Parameter<T>&)>& f) const {
  visit(*this, f);
}

template <class T>
std::vector<Parameter<T>*> ModelParams<T>::parameters() {
  std::vector<Parameter<T>*> out;
  visit(*this, [&](Parameter<T>& p) { out.push_back(&p); });
  return out;
}

template <class T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  visit(*this, [&](const Parameter<T>& p) { n += p.size(); });
  return n;
}

template <class T>
void ModelParams<T>::zero_grad() {
  visit(*this, [](Parameter<T>& p) { p.zero_grad(); });
}

template <class T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  const auto specs = parameter_specs(config);
  ModelParams<T> p;
  p.config = config;
  allocate(p);
  assign_from<T>(p, specs, [&](const ArraySpec& s) { return init_array<T>(s, seed); },
                 [](const std::string&) { return true; });
  p.norm = Normalizers<T>::identity(config);
  return p;
}

template <class T>
ModelParams<T> swap_head_for_nmsp(const ModelParams<T>& pretrained, int stat_width, std::uint64_t seed) {
  if (pretrained.config.head != HeadKind::Mpp) throw ConfigError("head swap: source model does not have an MPP head");
  if (pretrained.config.stat_input_width != static_cast<int>(kNumRawStats)) {
    throw ConfigError("head swap: source stat width " + std::to_string(pretrained.config.stat_input_width) +
                      ", expected 39");
  }
  ModelParams<T> p = pretrained;
  p.config.head = HeadKind::Nmsp;
  p.config.stat_input_width = stat_width;
  p.config.validate();
  const auto specs = parameter_specs(p.config);
  p.stat_mlp.assign(stat_widths(p.config).size() - 1, {});
  p.head.assign(head_widths(p.config).size() - 1, {});
  const std::uint64_t s = derive_seed(seed, "nmsp-head-swap");
  assign_from<T>(p, specs, [&](const ArraySpec& a) { return init_array<T>(a, s); },
                 [](const std::string& name) { return name.starts_with("stat_mlp.") || name.starts_with("head."); });
  p.norm = Normalizers<T>::identity(p.config);
  for (auto* q : p.parameters()) q->grad = Tensor<T>(q->value.shape());
  return p;
}

namespace {

template <class T, class P, class Reg>
Bound<T> bind_with(P& params, Reg&& reg) {
  Bound<T> b;
  b.config = &params.config;
  b.norm = &params.norm;
  b.player_table = reg(params.player_table);
  b.position_table = reg(params.position_table);
  if (params.config.use_team_embeddings) b.team_table = reg(params.team_table);
  for (auto& l : params.stat_mlp) b.stat_mlp.emplace_back(reg(l.w), reg(l.b));
  for (auto& e : params.layers) {
    typename Bound<T>::Layer L;
    L.wq = reg(e.q.w);
    L.bq = reg(e.q.b);
    L.wk = reg(e.k.w);
    L.bk = reg(e.k.b);
    L.wv = reg(e.v.w);
    L.bv = reg(e.v.b);
    L.wo = reg(e.o.w);
    L.bo = reg(e.o.b);
    L.ln1_g = reg(e.ln1_gain);
    L.ln1_b = reg(e.ln1_bias);
    L.w1 = reg(e.ff1.w);
    L.b1 = reg(e.ff1.b);
    L.w2 = reg(e.ff2.w);
    L.b2 = reg(e.ff2.b);
    L.ln2_g = reg(e.ln2_gain);
    L.ln2_b = reg(e.ln2_bias);
    b.layers.push_back(L);
  }
  for (auto& l : params.head) b.head.emplace_back(reg(l.w), reg(l.b));
  return b;
}

template <class T>
Var<T> apply_mlp(Var<T> x, const std::vector<std::pair<Var<T>, Var<T>>>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = num::linear(x, layers[i].first, layers[i].second);
    if (i + 1 < layers.size()) x = num::relu(x);
  }
  return x;
}

}  // namespace

template <class T>
Bound<T> bind(num::Graph<T>& g, ModelParams<T>& params) {
  return bind_with<T>(params, [&](Parameter<T>& p) { return g.parameter(p); });
}

template <class T>
Bound<T> bind(num::Graph<T>& g, const ModelParams<T>& params) {
  return bind_with<T>(params, [&](const Parameter<T>& p) { return g.constant_ref(p.value); });
}

std::vector<std::uint8_t> key_mask(const features::TokenizedMatch& tm, std::size_t n_rows) {
  const std::size_t n = n_rows ? n_rows : tm.tokens.size();
  std::vector<std::uint8_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = tm.tokens[i].is_pad ? 0 : 1;
  return m;
}

template <class T>
Var<T> embed_inputs(num::Graph<T>& g, const Bound<T>& b, const TokenInput& in) {
  const ModelConfig& c = *b.config;
  const features::TokenizedMatch& tm = *in.match;
  const std::size_t n = in.n_rows ? in.n_rows : tm.tokens.size();
  if (n > tm.tokens.size()) throw DimensionError("embed_inputs: more rows requested than tokens");
  if (tm.stat_width != sz(c.stat_input_width)) {
    throw DimensionError("embed_inputs: token stat width " + std::to_string(tm.stat_width) +
                         " but the model expects " + std::to_string(c.stat_input_width));
  }
  if (!in.players.empty() && in.players.size() < n) throw DimensionError("embed_inputs: player override too short");
  std::vector<int> players(n), positions(n), teams(n);
  const std::size_t w = tm.stat_width;
  Tensor<T> stats(n, w);
  const Normalizers<T>& norm = *b.norm;
  for (std::size_t i = 0; i < n; ++i) {
    const features::Token& t = tm.tokens[i];
    players[i] = in.players.empty() ? t.player : in.players[i];
    positions[i] = t.position;
    teams[i] = t.team;
    if (t.is_pad) continue;  // PAD rows keep zero stats
    const double* row = tm.stats.data() + i * w;
    for (std::size_t j = 0; j < w; ++j) {
      stats[i * w + j] = static_cast<T>((row[j] - static_cast<double>(norm.input_shift[j])) /
                                        static_cast<double>(norm.input_scale[j]));
    }
  }
  Var<T> x = num::add(num::embedding(b.player_table, std::span<const int>(players)),
                      num::embedding(b.position_table, std::span<const int>(positions)));
  if (c.use_team_embeddings) x = num::add(x, num::embedding(b.team_table, std::span<const int>(teams)));
  return num::add(x, apply_mlp(g.constant(std::move(stats)), b.stat_mlp));
}

template <class T>
Var<T> encode(num::Graph<T>& g, const Bound<T>& b, Var<T> x, std::span<const std::uint8_t> key_mask) {
  (void)g;
  const ModelConfig& c = *b.config;
  const std::size_t dh = sz(c.head_dim());
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  for (const auto& L : b.layers) {
    Var<T> q = num::linear(x, L.wq, L.bq);
    Var<T> k = num::linear(x, L.wk, L.bk);
    Var<T> v = num::linear(x, L.wv, L.bv);
    std::vector<Var<T>> heads;
    for (int h = 0; h < c.n_heads; ++h) {
      Var<T> qh = c.n_heads == 1 ? q : num::slice_cols(q, sz(h) * dh, dh);
      Var<T> kh = c.n_heads == 1 ? k : num::slice_cols(k, sz(h) * dh, dh);
      Var<T> vh = c.n_heads == 1 ? v : num::slice_cols(v, sz(h) * dh, dh);
      Var<T> att = num::softmax_rows(num::scale(num::matmul_nt(qh, kh), inv_sqrt), key_mask);
      heads.push_back(num::matmul(att, vh));
    }
    Var<T> mixed = heads.size() == 1 ? heads[0] : num::concat_cols(std::span<const Var<T>>(heads));
    Var<T> h = num::layer_norm(num::add(x, num::linear(mixed, L.wo, L.bo)), L.ln1_g, L.ln1_b);
    Var<T> f = num::linear(num::relu(num::linear(h, L.w1, L.b1)), L.w2, L.b2);
    x = num::layer_norm(num::add(h, f), L.ln2_g, L.ln2_b);
  }
  return x;
}

template <class T>
Var<T> mpp_logits(num::Graph<T>& g, const Bound<T>& b, Var<T> x_out, std::span<const int> rows) {
  (void)g;
  if (b.config->head != HeadKind::Mpp) throw ConfigError("mpp_logits: model has an NMSP head");
  Var<T> x = rows.empty() ? x_out : num::gather_rows(x_out, rows);
  return apply_mlp(x, b.head);
}

template <class T>
Var<T> nmsp_predict(num::Graph<T>& g, const Bound<T>& b, Var<T> x_out) {
  (void)g;
  const ModelConfig& c = *b.config;
  if (c.head != HeadKind::Nmsp) throw ConfigError("nmsp_predict: model has an MPP head");
  if (x_out.rows() != sz(c.seq_len)) {
    throw DimensionError("nmsp_predict: expected " + std::to_string(c.seq_len) + " token rows, got " +
                         std::to_string(x_out.rows()));
  }
  Var<T> y = apply_mlp(num::flatten(x_out), b.head);
  return num::affine_cols(y, b.norm->output_scale, b.norm->output_shift);
}

#define RB_INSTANTIATE(T)                                                                                  \
  template struct Normalizers<T>;                                                                          \
  template struct ModelParams<T>;                                                                          \
  template ModelParams<T> init_model<T>(const ModelConfig&, std::uint64_t);                                \
  template ModelParams<T> swap_head_for_nmsp<T>(const ModelParams<T>&, int, std::uint64_t);                \
  template Bound<T> bind<T>(num::Graph<T>&, ModelParams<T>&);                                              \
  template Bound<T> bind<T>(num::Graph<T>&, const ModelParams<T>&);                                        \
  template Var<T> embed_inputs<T>(num::Graph<T>&, const Bound<T>&, const TokenInput&);                     \
  template Var<T> encode<T>(num::Graph<T>&, const Bound<T>&, Var<T>, std::span<const std::uint8_t>);       \
  template Var<T> mpp_logits<T>(num::Graph<T>&, const Bound<T>&, Var<T>, std::span<const int>);            \
  template Var<T> nmsp_predict<T>(num::Graph<T>&, const Bound<T>&, Var<T>);

RB_INSTANTIATE(float)
RB_INSTANTIATE(double)

#undef RB_INSTANTIATE

}  // namespace rb::model
