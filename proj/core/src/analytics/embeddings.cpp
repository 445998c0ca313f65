#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rb/analytics/analytics.hpp"
#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"

namespace rb::analytics {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::vector<double> values, std::size_t dim,
                                 std::vector<std::int64_t> match_counts, std::string source)
    : ids_(std::move(ids)),
      values_(std::move(values)),
      dim_(dim),
      match_counts_(std::move(match_counts)),
      source_(std::move(source)) {
  if (ids_.empty() || dim_ == 0) throw IntegrityError("embedding matrix must have at least one row and column");
  if (values_.size() != ids_.size() * dim_) {
    throw IntegrityError("embedding matrix: " + std::to_string(values_.size()) + " values for " +
                         std::to_string(ids_.size()) + " rows of width " + std::to_string(dim_));
  }
  if (!match_counts_.empty() && match_counts_.size() != ids_.size()) {
    throw IntegrityError("embedding matrix: match count list does not cover every row");
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw IntegrityError("embedding matrix: duplicate id " + id);
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw IntegrityError("embedding matrix: non-finite value");
  }
}

std::size_t EmbeddingMatrix::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw IntegrityError("unknown id " + id);
  return static_cast<std::size_t>(it - ids_.begin());
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine: zero vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

namespace {

Ranking rank_against(std::span<const double> query, const EmbeddingMatrix& em, std::int64_t min_matches,
                     std::size_t exclude) {
  Ranking out;
  for (std::size_t i = 0; i < em.size(); ++i) {
    if (i == exclude) continue;
    if (em.has_match_counts() && em.match_count(i) < min_matches) continue;
    out.emplace_back(em.ids()[i], cosine(query, em.row(i)));
  }
  if (out.empty()) throw DomainError("no candidate satisfies the match-count filter");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

}  // namespace

Ranking top_k_similar(const std::string& query_id, const EmbeddingMatrix& em, std::size_t k,
                      std::int64_t min_matches) {
  if (k == 0) throw ConfigError("top_k_similar: k must be at least 1");
  const std::size_t q = em.index_of(query_id);
  Ranking r = rank_against(em.row(q), em, min_matches, q);
  if (r.size() > k) r.resize(k);
  return r;
}

Ranking rank_players_for_position(const std::string& position_id, const EmbeddingMatrix& players,
                                  const EmbeddingMatrix& positions, std::int64_t min_matches) {
  if (players.dim() != positions.dim()) throw DimensionError("player and position embeddings differ in width");
  const std::size_t p = positions.index_of(position_id);
  return rank_against(positions.row(p), players, min_matches, players.size());
}

namespace {

double sq_dist(std::span<const double> a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Clustering lloyd(const EmbeddingMatrix& em, std::size_t k, Rng& rng) {
  const std::size_t n = em.size();
  const std::size_t dim = em.dim();
  Clustering c;
  c.centroids.assign(k * dim, 0.0);
  c.assignment.assign(n, 0);

  // k-means++ seeding
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (std::size_t m = 0; m < k; ++m) {
    if (m > 0) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (total > 0.0) {
        double u = rng.uniform01() * total;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          u -= d2[i];
          if (u < 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<std::size_t>(rng.below(n));
      }
    }
    auto row = em.row(pick);
    std::copy(row.begin(), row.end(), c.centroids.begin() + static_cast<std::ptrdiff_t>(m * dim));
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(em.row(i), &c.centroids[m * dim]));
  }

  for (int iter = 0; iter < 300; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(em.row(i), &c.centroids[0]);
      for (std::size_t m = 1; m < k; ++m) {
        const double d = sq_dist(em.row(i), &c.centroids[m * dim]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(m);
        }
      }
      if (c.assignment[i] != best) {
        c.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto m = static_cast<std::size_t>(c.assignment[i]);
      ++counts[m];
      auto row = em.row(i);
      for (std::size_t j = 0; j < dim; ++j) sums[m * dim + j] += row[j];
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (counts[m] == 0) continue;  // empty cluster keeps its previous centroid
      for (std::size_t j = 0; j < dim; ++j) c.centroids[m * dim + j] = sums[m * dim + j] / static_cast<double>(counts[m]);
    }
  }
  c.wcss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c.wcss += sq_dist(em.row(i), &c.centroids[static_cast<std::size_t>(c.assignment[i]) * dim]);
  }
  return c;
}

}  // namespace

Clustering cluster_positions(const EmbeddingMatrix& positions, std::size_t k, std::uint64_t seed, int restarts) {
  if (k == 0 || k > positions.size()) {
    throw DomainError("cluster_positions: k=" + std::to_string(k) + " with " + std::to_string(positions.size()) +
                      " points");
  }
  if (restarts < 1) throw ConfigError("cluster_positions: restarts must be at least 1");
  Clustering best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Clustering c = lloyd(positions, k, rng);
    if (c.wcss < best.wcss) best = std::move(c);
  }
  return best;
}

Cohesion team_cohesion(std::span<const std::string> player_ids, const EmbeddingMatrix& players) {
  if (player_ids.size() < 2) throw DomainError("team_cohesion: squad must have at least two players");
  std::vector<std::size_t> rows;
  rows.reserve(player_ids.size());
  for (const auto& id : player_ids) rows.push_back(players.index_of(id));
  double total = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (a != b) total += cosine(players.row(rows[a]), players.row(rows[b]));
    }
  }
  const double n = static_cast<double>(rows.size());
  Cohesion c;
  c.cohesion = total / n;
  c.pair_normalized = c.cohesion / (n - 1.0);
  return c;
}

std::vector<double> dissimilarity_matrix(std::span<const std::string> player_ids, const EmbeddingMatrix& players) {
  const std::size_t n = player_ids.size();
  if (n < 2) throw DomainError("dissimilarity_matrix: need at least two players");
  std::vector<std::size_t> rows;
  for (const auto& id : player_ids) rows.push_back(players.index_of(id));
  std::vector<double> m(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = 1.0 - cosine(players.row(rows[a]), players.row(rows[b]));
      m[a * n + b] = d;
      m[b * n + a] = d;
    }
  }
  return m;
}

std::vector<std::string> most_frequent_players(std::span<const ingest::PlayerMatchStats> rows,
                                               const std::string& team_id, std::size_t n) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& r : rows) {
    if (r.team_id == team_id && r.participated) ++counts[r.player_id];
  }
  std::vector<std::pair<std::string, std::int64_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size() && i < n; ++i) out.push_back(v[i].first);
  return out;
}

std::vector<std::int64_t> participation_counts(std::span<const ingest::PlayerMatchStats> rows,
                                               std::span<const std::string> player_ids) {
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& r : rows) {
    if (r.participated) ++counts[r.player_id];
  }
  std::vector<std::int64_t> out;
  out.reserve(player_ids.size());
  for (const auto& id : player_ids) {
    auto it = counts.find(id);
    out.push_back(it == counts.end() ? 0 : it->second);
  }
  return out;
}

std::string serialize_embeddings(const EmbeddingMatrix& em, std::int64_t min_matches) {
  std::ostringstream out;
  out.precision(17);
  out << "# source=" << (em.source().empty() ? "unknown" : em.source()) << " dim=" << em.dim()
      << " min_matches=" << min_matches;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < em.size(); ++i) kept += !em.has_match_counts() || em.match_count(i) >= min_matches;
  out << " n=" << kept << '\n';
  for (std::size_t i = 0; i < em.size(); ++i) {
    if (em.has_match_counts() && em.match_count(i) < min_matches) continue;
    out << em.ids()[i] << '\t' << em.match_count(i);
    for (double v : em.row(i)) out << '\t' << v;
    out << '\n';
  }
  return out.str();
}

EmbeddingMatrix parse_embeddings(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ParseError("embeddings: missing header", 0);
  std::string source;
  std::size_t dim = 0;
  {
    std::istringstream head(line.substr(2));
    std::string kv;
    while (head >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      if (kv.substr(0, eq) == "source") source = kv.substr(eq + 1);
      if (kv.substr(0, eq) == "dim") dim = std::stoul(kv.substr(eq + 1));
    }
  }
  if (dim == 0) throw ParseError("embeddings: header lacks dim", 0);
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<std::int64_t> counts;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::istringstream row(line);
    std::string id;
    std::int64_t count = 0;
    if (!std::getline(row, id, '\t') || !(row >> count)) throw ParseError("embeddings: malformed row", offset);
    ids.push_back(id);
    counts.push_back(count);
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!(row >> v)) throw ParseError("embeddings: row " + id + " is shorter than dim", offset);
      values.push_back(v);
    }
    offset += line.size() + 1;
  }
  return EmbeddingMatrix(std::move(ids), std::move(values), dim, std::move(counts), std::move(source));
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& em, std::int64_t min_matches) {
  write_file(path, serialize_embeddings(em, min_matches));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) { return parse_embeddings(read_file(path)); }

}  // namespace rb::analytics
