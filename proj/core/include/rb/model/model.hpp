#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rb/features/features.hpp"
#include "rb/numcore/graph.hpp"

namespace rb::model {

enum class HeadKind { Mpp, Nmsp };

std::string to_string(HeadKind h);
HeadKind head_from_string(const std::string& s);

struct ModelConfig {
  int n_layers = 1;
  int dim = 64;
  int n_heads = 4;
  int ff_width = 256;
  int vocab_size = 0;  // players + MASK + PAD
  int n_positions = static_cast<int>(features::Vocabulary::kPositionTableSize);
  int n_teams = 0;  // team table rows, PAD included
  int stat_input_width = static_cast<int>(kNumRawStats);
  bool use_team_embeddings = true;
  HeadKind head = HeadKind::Mpp;
  int n_stats = static_cast<int>(kNumTeamStats);
  int seq_len = static_cast<int>(kSequenceLength);
  /// Hidden ReLU layers (width dim) in the stat MLP and the task head.
  int mlp_hidden_layers = 1;

  /// Throws ConfigError for non-positive sizes or dim not divisible by n_heads.
  void validate() const;
  int head_dim() const { return dim / n_heads; }
  bool operator==(const ModelConfig&) const = default;
};

/// Defaults for an `l`-layer, `d`-wide model: one head per 16 dims, feed-forward 4d.
ModelConfig make_config(int n_layers, int dim, int vocab_size, int n_teams);

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

struct ArraySpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t size() const;
};

/// Names and shapes of every trainable array, in canonical order.
std::vector<ArraySpec> parameter_specs(const ModelConfig& c);
std::size_t parameter_count(const ModelConfig& c);

template <class T>
struct Linear {
  num::Parameter<T> w;  // [in, out]
  num::Parameter<T> b;  // [1, out]
};

template <class T>
struct EncoderLayer {
  Linear<T> q, k, v, o;
  num::Parameter<T> ln1_gain, ln1_bias;
  Linear<T> ff1, ff2;
  num::Parameter<T> ln2_gain, ln2_bias;
};

/// Fixed affine maps around the network: stat inputs are standardized with
/// (x - shift) / scale before the stat MLP, NMSP outputs are mapped back with
/// y * scale + shift. Identity by default; fitted on training data and stored
/// in checkpoints, but not trained.
template <class T>
struct Normalizers {
  num::Tensor<T> input_shift, input_scale;    // [1, stat_input_width]
  num::Tensor<T> output_shift, output_scale;  // [1, 2 * n_stats] (NMSP only)

  static Normalizers identity(const ModelConfig& c);
  bool operator==(const Normalizers&) const = default;
};

template <class T>
struct ModelParams {
  ModelConfig config;
  num::Parameter<T> player_table;    // [vocab_size, dim]
  num::Parameter<T> position_table;  // [n_positions, dim]
  num::Parameter<T> team_table;      // [n_teams, dim]; unused when team embeddings are off
  std::vector<Linear<T>> stat_mlp;
  std::vector<EncoderLayer<T>> layers;
  std::vector<Linear<T>> head;
  Normalizers<T> norm;

  /// Visits trainable arrays in parameter_specs() order.
  void for_each(const std::function<void(num::Parameter<T>&)>& f);
  void for_each(const std::function<void(const num::Parameter<T>&)>& f) const;
  std::vector<num::Parameter<T>*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in the input width (the
/// row count for embedding tables); biases 0; layer-norm gains 1. Each array
/// draws from a stream derived from (seed, array name).
template <class T>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed);

/// Replaces the MPP head by a freshly initialized NMSP head and re-initializes the
/// stat MLP at `stat_width` inputs; tables and encoder are copied verbatim.
/// Throws ConfigError when the source is not an MPP model with 39 stat inputs.
template <class T>
ModelParams<T> swap_head_for_nmsp(const ModelParams<T>& pretrained, int stat_width, std::uint64_t seed);

/// Parameters registered in one graph.
template <class T>
struct Bound {
  const ModelConfig* config = nullptr;
  const Normalizers<T>* norm = nullptr;
  num::Var<T> player_table, position_table, team_table;
  std::vector<std::pair<num::Var<T>, num::Var<T>>> stat_mlp;
  struct Layer {
    num::Var<T> wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };
  std::vector<Layer> layers;
  std::vector<std::pair<num::Var<T>, num::Var<T>>> head;
};

/// Trainable binding: backward() accumulates into the parameters' gradients.
template <class T>
Bound<T> bind(num::Graph<T>& g, ModelParams<T>& params);
/// Frozen binding for inference.
template <class T>
Bound<T> bind(num::Graph<T>& g, const ModelParams<T>& params);

/// Model inputs for the first `n_rows` tokens of a match; `players` overrides the
/// player indices (MASK substitution) when non-empty.
struct TokenInput {
  const features::TokenizedMatch* match = nullptr;
  std::span<const int> players;
  std::size_t n_rows = 0;  // 0 = full sequence
};

/// X_init = PE + SPE + TE + stat_mlp(stats), TE omitted when team embeddings are off.
template <class T>
num::Var<T> embed_inputs(num::Graph<T>& g, const Bound<T>& b, const TokenInput& in);

/// Post-norm encoder; attention to keys with key_mask == 0 (PAD) is disabled.
template <class T>
num::Var<T> encode(num::Graph<T>& g, const Bound<T>& b, num::Var<T> x_init, std::span<const std::uint8_t> key_mask);

/// Per-token logits over the vocabulary, optionally for a subset of rows.
template <class T>
num::Var<T> mpp_logits(num::Graph<T>& g, const Bound<T>& b, num::Var<T> x_out, std::span<const int> rows = {});

/// Token-major flatten of the full sequence, then the head MLP to 2 * n_stats values.
template <class T>
num::Var<T> nmsp_predict(num::Graph<T>& g, const Bound<T>& b, num::Var<T> x_out);

/// 1 for real tokens, 0 for PAD, over the first `n_rows` tokens.
std::vector<std::uint8_t> key_mask(const features::TokenizedMatch& tm, std::size_t n_rows = 0);

// Checkpoints: a directory with manifest.json and params.bin (little-endian
// arrays in manifest order). See docs/checkpoint_format.md.
inline constexpr int kCheckpointVersion = 1;

template <class T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& dir,
                     const nlohmann::json& extra);
template <class T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& dir);
/// Throws IntegrityError on truncated or inconsistent files and ConfigError on
/// version or precision mismatch.
template <class T>
ModelParams<T> load_checkpoint(const std::filesystem::path& dir);

/// "float32" or "float64" as recorded in a checkpoint manifest.
std::string checkpoint_precision(const std::filesystem::path& dir);
nlohmann::json read_checkpoint_manifest(const std::filesystem::path& dir);

template <class T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "float32" : "float64";
}

}  // namespace rb::model
