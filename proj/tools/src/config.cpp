#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"

namespace rb::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void check_key(const std::string& key, const std::string& origin) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw ConfigError(origin + ": unknown config key '" + key + "'");
}

long long as_int(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config " + key + ": not an integer: " + v);
  return out;
}

double as_double(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("config " + key + ": not a number: " + v);
}

bool as_bool(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config " + key + ": not a boolean: " + v);
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "task",       "layers",       "dim",          "heads",       "ff_width",         "mlp_hidden_layers",
      "team_embeddings", "batch_size", "lr",         "warmup",      "weight_decay",     "epochs",
      "total_steps", "seed",        "eval_every",   "precision",   "normalize_inputs", "normalize_targets"};
  return keys;
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    check_key(key, origin + ":" + std::to_string(n));
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  return parse_settings(read_file(path), path.string());
}

void apply_override(Settings& s, const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + token + "' is not key=value");
  const std::string key = token.substr(0, eq);
  check_key(key, "override");
  s[key] = token.substr(eq + 1);
}

Settings parse_override_line(const std::string& line, const std::string& origin) {
  Settings out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    try {
      apply_override(out, tok);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
  return out;
}

Resolved resolve(const Settings& given, const features::Vocabulary& vocab, const model::ModelConfig* base) {
  Settings s;
  s["task"] = "mpp";
  s["layers"] = "1";
  s["dim"] = "64";
  s["mlp_hidden_layers"] = "1";
  s["team_embeddings"] = "true";
  s["batch_size"] = "256";
  s["lr"] = "1e-4";
  s["weight_decay"] = "0.01";
  s["epochs"] = "10";
  s["total_steps"] = "0";
  s["seed"] = "0";
  s["eval_every"] = "1";
  s["precision"] = "float32";
  s["normalize_inputs"] = "true";
  s["normalize_targets"] = "true";
  if (base) {
    s["layers"] = std::to_string(base->n_layers);
    s["dim"] = std::to_string(base->dim);
    s["heads"] = std::to_string(base->n_heads);
    s["ff_width"] = std::to_string(base->ff_width);
    s["mlp_hidden_layers"] = std::to_string(base->mlp_hidden_layers);
    s["team_embeddings"] = base->use_team_embeddings ? "true" : "false";
  }
  for (const auto& [k, v] : given) s[k] = v;
  if (given.contains("total_steps") && !given.contains("epochs")) s["epochs"] = "0";

  Resolved r;
  train::TrainConfig& c = r.train;
  c.task = train::task_from_string(s["task"]);
  if (!s.contains("warmup")) s["warmup"] = c.task == train::Task::Nmsp ? "0.1" : "0.0";
  const auto layers = as_int(s, "layers"), dim = as_int(s, "dim");
  if (layers < 1 || dim < 1) throw ConfigError("config: layers and dim must be positive");
  c.model = model::make_config(static_cast<int>(layers), static_cast<int>(dim), static_cast<int>(vocab.total_size()),
                               static_cast<int>(vocab.team_table_size()));
  if (!s.contains("heads") || (base && !given.contains("heads") && (given.contains("dim"))))
    s["heads"] = std::to_string(c.model.n_heads);
  if (!s.contains("ff_width") || (base && !given.contains("ff_width") && given.contains("dim")))
    s["ff_width"] = std::to_string(c.model.ff_width);
  c.model.n_heads = static_cast<int>(as_int(s, "heads"));
  c.model.ff_width = static_cast<int>(as_int(s, "ff_width"));
  c.model.mlp_hidden_layers = static_cast<int>(as_int(s, "mlp_hidden_layers"));
  c.model.use_team_embeddings = as_bool(s, "team_embeddings");
  if (c.task == train::Task::Nmsp) {
    c.model.head = model::HeadKind::Nmsp;
    c.model.stat_input_width = static_cast<int>(kNmspFeatureWidth);
  }
  c.model.validate();
  const auto batch = as_int(s, "batch_size");
  if (batch < 1) throw ConfigError("config: batch_size must be positive");
  c.batch_size = static_cast<std::size_t>(batch);
  c.base_lr = as_double(s, "lr");
  c.warmup_ratio = as_double(s, "warmup");
  c.weight_decay = as_double(s, "weight_decay");
  c.epochs = as_int(s, "epochs");
  c.total_steps = as_int(s, "total_steps");
  const auto seed = as_int(s, "seed");
  if (seed < 0) throw ConfigError("config: seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.eval_every_epochs = as_int(s, "eval_every");
  c.normalize_inputs = as_bool(s, "normalize_inputs");
  c.normalize_targets = as_bool(s, "normalize_targets");
  if (s["precision"] != "float32" && s["precision"] != "float64")
    throw ConfigError("config precision: expected float32 or float64, got " + s["precision"]);
  r.precision = s["precision"];
  c.validate();
  r.snapshot = s;
  return r;
}

std::string render_settings(const Settings& s) {
  std::string out;
  for (const auto& [k, v] : s) out += k + " = " + v + "\n";
  return out;
}

}  // namespace rb::cli
