#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "census/matchers.hpp"

namespace census {

enum class ReviewSource { algorithmic, human, simulated_human };

std::string_view to_string(ReviewSource s);
std::optional<ReviewSource> review_source_from_string(std::string_view s);
inline bool is_human(ReviewSource s) { return s != ReviewSource::algorithmic; }

/// One entry of the review log. `a < b` lexicographically.
struct ReviewDecision {
  std::uint64_t seq = 0;  // 1-based position in the run's review log
  std::string request_id;
  std::string a;
  std::string b;
  Decision decision = Decision::incomparable;
  ReviewSource source = ReviewSource::algorithmic;
  double confidence = 0.5;  // algorithmic only; probability of same
  int contribution = 0;

  bool operator==(const ReviewDecision&) const = default;
};

/// Signed integer weight of a single review. Algorithmic reviews map the
/// verifier's probability-of-same p to round(100 * (2p - 1)); human reviews
/// are worth +-human_weight; incomparable is always 0.
int review_contribution(Decision d, ReviewSource s, double confidence, int human_weight);

struct Edge {
  int u = 0;  // u < v, vertex indices
  int v = 0;
  std::vector<ReviewDecision> reviews;
  int weight = 0;

  int algorithmic_reviews() const;
  int human_reviews() const;
};

struct Neighbor {
  int vertex;
  int edge;
};

/// Vertices are annotation ids held in sorted order, so comparing vertex
/// indices is the same as comparing ids lexicographically.
class IdentificationGraph {
 public:
  IdentificationGraph() = default;
  explicit IdentificationGraph(std::vector<std::string> ids);

  int vertex_count() const { return static_cast<int>(ids_.size()); }
  const std::string& id(int v) const { return ids_[static_cast<std::size_t>(v)]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<int> index_of(std::string_view id) const;

  /// Returns the existing edge index or appends a new, unreviewed edge.
  int add_edge(int u, int v);
  std::optional<int> find_edge(int u, int v) const;
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }

  /// Appends a review; the edge's weight is the running sum of contributions.
  void add_review(int e, ReviewDecision r);
  int weight(int u, int v) const;
  std::pair<int, int> review_counts(int u, int v) const;  // (algorithmic, human)

  /// Recomputes every weight from its reviews; false if any stored weight drifted.
  bool weights_consistent() const;

 private:
  static std::uint64_t key(int u, int v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) | static_cast<std::uint32_t>(v);
  }

  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, int> edge_index_;
  std::vector<std::vector<Neighbor>> adj_;
};

/// A total partition of the vertices. A cluster's id is its smallest vertex
/// index, which is also its lexicographically smallest annotation id.
class Clustering {
 public:
  Clustering() = default;
  static Clustering singletons(int n);
  /// Builds from arbitrary labels; cluster ids are renormalised.
  static Clustering from_labels(std::span<const int> labels);

  int vertex_count() const { return static_cast<int>(label_.size()); }
  int cluster_of(int v) const { return label_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& labels() const { return label_; }
  const std::map<int, std::vector<int>>& clusters() const { return members_; }
  const std::vector<int>& members(int cluster) const { return members_.at(cluster); }
  std::size_t cluster_count() const { return members_.size(); }

  /// Replaces the clusters listed in `old_ids` by `parts` (which must cover
  /// exactly their vertices). Returns the ids of the new clusters.
  std::vector<int> replace(std::span<const int> old_ids, const std::vector<std::vector<int>>& parts);

  bool operator==(const Clustering& o) const { return label_ == o.label_; }

 private:
  std::vector<int> label_;
  std::map<int, std::vector<int>> members_;
};

/// Sum of intra-cluster weights minus the sum of inter-cluster weights.
long long clustering_score(const IdentificationGraph& g, const Clustering& c);

/// One cluster (second == -1) or a pair of clusters joined by an edge.
struct LocalClustering {
  int first = -1;
  int second = -1;

  bool is_pair() const { return second >= 0; }
  auto operator<=>(const LocalClustering&) const = default;
};

enum class AlternativeKind { split, merge, transfer };

/// A re-partition of a local clustering's vertex set, with the exact score
/// change it would cause.
struct Alternative {
  AlternativeKind kind = AlternativeKind::split;
  std::vector<std::vector<int>> parts;  // each sorted; parts ordered by first vertex
  long long delta = 0;
};

struct AlternativeConfig {
  int exhaustive_split_limit = 8;
};

/// All singles plus every pair of clusters connected by at least one edge,
/// in ascending order.
std::vector<LocalClustering> local_clusterings(const IdentificationGraph& g, const Clustering& c);

std::vector<int> local_vertices(const Clustering& c, const LocalClustering& lc);

/// Singles of size <= limit: every 2-way split. Larger singles: a greedy
/// single-vertex improvement pass seeded from the weakest internal edge,
/// plus each one-vertex peel-off. Pairs: the merge plus every single-vertex
/// transfer between the two clusters.
std::vector<Alternative> enumerate_alternatives(const IdentificationGraph& g, const Clustering& c,
                                                const LocalClustering& lc, const AlternativeConfig& cfg = {});

/// Highest-delta alternative (first in enumeration order on ties).
std::optional<Alternative> best_alternative(const IdentificationGraph& g, const Clustering& c,
                                            const LocalClustering& lc, const AlternativeConfig& cfg = {});

/// Vertex pairs within the local clustering whose same-cluster relation
/// differs between the current clustering and the alternative, sorted.
std::vector<std::pair<int, int>> decisive_pairs(const Clustering& c, const LocalClustering& lc,
                                                const Alternative& alt);

/// Applies alt to the clustering; returns the new cluster ids.
std::vector<int> apply_alternative(Clustering& c, const LocalClustering& lc, const Alternative& alt);

}  // namespace census
