#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rb/ingest/types.hpp"

namespace rb::analytics {

// ---------------------------------------------------------------------------
// Forecast baseline and report metrics
// ---------------------------------------------------------------------------

/// Mean of the min(5, target_index) vectors immediately preceding `target_index`
/// in a chronological history. Returns nullopt when there is no prior match; such
/// matches are excluded from evaluation.
std::optional<std::vector<double>> baseline_last5(std::span<const std::vector<double>> history,
                                                  std::size_t target_index, std::size_t window = 5);

/// rmse / target_mean; nullopt when target_mean <= 0.
std::optional<double> dispersion(double rmse, double target_mean);

/// 100 * (baseline - model) / baseline. Throws DomainError for baseline <= 0.
double pct_improvement(double baseline_mse, double model_mse);

/// Fixed two-decimal rendering truncated toward zero ("37.70").
std::string format_pct(double pct);

/// round(100 * (delta_baseline - delta_model)); positive means the model disperses less.
int delta_diff_points(double delta_baseline, double delta_model);

/// Per-column RMSE and dispersion over pooled slots.
struct StatMetric {
  std::string name;
  double rmse = 0.0;
  double target_mean = 0.0;
  std::optional<double> delta;
};

/// Pools the home and away slots of each of `n_stats` statistics: slot j and
/// slot j + n_stats of every row contribute to statistic j.
std::vector<StatMetric> pooled_stat_metrics(std::span<const std::vector<double>> predictions,
                                            std::span<const std::vector<double>> targets,
                                            std::size_t n_stats);

/// Mean squared error over all rows and columns.
double global_mse(std::span<const std::vector<double>> predictions,
                  std::span<const std::vector<double>> targets);

// ---------------------------------------------------------------------------
// Embedding analyses
// ---------------------------------------------------------------------------

/// Rows of learned vectors keyed by entity id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Throws IntegrityError on duplicate ids, non-finite values or size mismatch.
  EmbeddingMatrix(std::vector<std::string> ids, std::vector<double> values, std::size_t dim,
                  std::vector<std::int64_t> match_counts = {}, std::string source = {});

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& source() const noexcept { return source_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  /// Throws IntegrityError for unknown ids.
  std::size_t index_of(const std::string& id) const;
  std::int64_t match_count(std::size_t i) const { return match_counts_.empty() ? 0 : match_counts_[i]; }
  bool has_match_counts() const noexcept { return !match_counts_.empty(); }

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
  std::vector<std::int64_t> match_counts_;
  std::string source_;
};

/// a.b / (|a| |b|). Throws DomainError for a zero vector or length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

using Ranking = std::vector<std::pair<std::string, double>>;

/// Exhaustive cosine ranking of candidates with match_count >= min_matches,
/// excluding the query; score descending, ties by ascending id. Throws
/// IntegrityError for unknown ids and DomainError when no candidate remains.
Ranking top_k_similar(const std::string& query_id, const EmbeddingMatrix& em, std::size_t k = 10,
                      std::int64_t min_matches = 10);

/// Every eligible player ranked by cosine to one position vector.
Ranking rank_players_for_position(const std::string& position_id, const EmbeddingMatrix& players,
                                  const EmbeddingMatrix& positions, std::int64_t min_matches = 10);

struct Clustering {
  std::vector<int> assignment;  // cluster per row
  std::vector<double> centroids;  // [k, dim]
  double wcss = 0.0;
};

/// Lloyd's k-means with k-means++ seeding; best of `restarts` by within-cluster
/// sum of squares. Deterministic per seed. Throws DomainError for k == 0 or k > n.
Clustering cluster_positions(const EmbeddingMatrix& positions, std::size_t k, std::uint64_t seed,
                             int restarts = 20);

struct Cohesion {
  double cohesion = 0.0;         // (1/|T|) sum_i sum_{j != i} cos(e_i, e_j)
  double pair_normalized = 0.0;  // cohesion / (|T| - 1), in [-1, 1]
};

/// Throws DomainError for squads smaller than two.
Cohesion team_cohesion(std::span<const std::string> player_ids, const EmbeddingMatrix& players);

/// M[i][j] = 1 - cos(e_i, e_j), row-major [n, n].
std::vector<double> dissimilarity_matrix(std::span<const std::string> player_ids,
                                         const EmbeddingMatrix& players);

/// Up to `n` players of `team_id` with the most participated matches; ties by id.
std::vector<std::string> most_frequent_players(std::span<const ingest::PlayerMatchStats> rows,
                                               const std::string& team_id, std::size_t n = 14);

/// Participated-match count per player id.
std::vector<std::int64_t> participation_counts(std::span<const ingest::PlayerMatchStats> rows,
                                               std::span<const std::string> player_ids);

// Text layout: a "# key=value ..." header line (source, dim, n, min_matches), then
// one row per entity: id, match count, dim values, tab separated.
std::string serialize_embeddings(const EmbeddingMatrix& em, std::int64_t min_matches = 0);
EmbeddingMatrix parse_embeddings(std::string_view text);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& em,
                      std::int64_t min_matches = 0);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

}  // namespace rb::analytics
