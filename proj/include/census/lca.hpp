#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "census/exec.hpp"
#include "census/graph.hpp"
#include "census/json_io.hpp"
#include "census/kernels.hpp"
#include "census/matchers.hpp"

namespace census {

struct LcaConfig {
  int top_k = 5;
  int human_weight = 300;
  int stability_margin = 300;
  int max_algo_reviews_per_pair = 2;
  int max_human_reviews_per_pair = 2;
  long long max_iterations = 1'000'000;
  std::uint64_t seed = 0;
  int exhaustive_split_limit = 8;
  Exec exec = Exec::parallel;

  void validate() const;
  AlternativeConfig alternatives() const { return {exhaustive_split_limit}; }
};

ojson lca_config_to_json(const LcaConfig& c);
LcaConfig lca_config_from_json(const nlohmann::json& j);

struct ReviewRequest {
  std::string request_id;
  std::string a;
  std::string b;
  int attempt = 1;       // 1-based human attempt on this pair
  long long margin = 0;  // margin of the local clustering that raised it

  bool operator==(const ReviewRequest&) const = default;
};

struct ChannelAnswer {
  Decision decision = Decision::incomparable;
  ReviewSource source = ReviewSource::human;
};

/// Where human review requests go. Returning nullopt parks the request: the
/// engine stops and waits for LcaEngine::answer.
class ReviewChannel {
 public:
  virtual ~ReviewChannel() = default;
  virtual std::optional<ChannelAnswer> request(const ReviewRequest& req) = 0;
};

class SimulatedHumanChannel final : public ReviewChannel {
 public:
  explicit SimulatedHumanChannel(const HumanReviewer& human) : human_(human) {}
  std::optional<ChannelAnswer> request(const ReviewRequest& req) override {
    return ChannelAnswer{human_.review(req.a, req.b, req.attempt), ReviewSource::simulated_human};
  }

 private:
  const HumanReviewer& human_;
};

/// Never answers; every human request parks the run.
class DeferredChannel final : public ReviewChannel {
 public:
  std::optional<ChannelAnswer> request(const ReviewRequest&) override { return std::nullopt; }
};

enum class RunPhase { created, weighting, stability, done };
enum class RunStatus { running, awaiting_review, converged, iteration_limit, stopped };

std::string_view to_string(RunPhase p);
std::string_view to_string(RunStatus s);

struct TraceEntry {
  std::uint64_t iteration = 0;
  std::string event;  // weighted | scored | review
  long long score = 0;
  std::size_t clusters = 0;
  std::size_t reviews = 0;
  long long margin = 0;

  bool operator==(const TraceEntry&) const = default;
};

/// annotation_id -> cluster id (the cluster's smallest annotation id)
using ClusterAssignment = std::map<std::string, std::string>;

struct RunResult {
  ClusterAssignment clustering;
  std::size_t cluster_count = 0;
  std::size_t algorithmic_reviews = 0;
  std::size_t human_reviews = 0;
  std::size_t total_reviews = 0;
  double automation_rate = 1.0;
  bool converged = false;
  RunStatus status = RunStatus::running;
  std::vector<TraceEntry> trace;
};

/// Caches each local clustering's best alternative, keyed on per-cluster
/// version stamps. Any membership change or new review on a cluster's
/// vertices bumps its stamp.
class LocalEvaluator {
 public:
  LocalEvaluator(AlternativeConfig cfg, Exec exec) : cfg_(cfg), exec_(exec) {}

  std::vector<kernels::LocalEvaluation> evaluate(const IdentificationGraph& g, const Clustering& c);
  void touch(int cluster_id) { ++version_[cluster_id]; }
  void reset() {
    version_.clear();
    cache_.clear();
  }

 private:
  struct Entry {
    std::uint64_t first_version;
    std::uint64_t second_version;
    std::optional<Alternative> best;
  };
  std::uint64_t version(int id) const;

  AlternativeConfig cfg_;
  Exec exec_;
  std::map<int, std::uint64_t> version_;
  std::map<LocalClustering, Entry> cache_;
};

/// Singleton clusters plus an edge from every annotation to each of its
/// top_k ranker candidates (undirected, deduplicated), no reviews yet.
IdentificationGraph init_graph(std::vector<std::string> ids, const Ranker& ranker, const LcaConfig& cfg,
                               std::vector<std::string>* warnings = nullptr);

/// Gives every unreviewed edge one algorithmic review; returns the reviews
/// in edge order with seq numbers continuing from `next_seq`.
std::vector<ReviewDecision> weight_edges(IdentificationGraph& g, const Verifier& verifier, const LcaConfig& cfg,
                                         std::uint64_t next_seq = 1);

struct ScoringOutcome {
  std::size_t moves = 0;
  bool converged = true;
  std::vector<kernels::LocalEvaluation> evaluations;  // of the final clustering
};

/// Applies the best positive-delta alternative until none is left, or until
/// max_moves moves were made (converged = false).
ScoringOutcome scoring_phase(const IdentificationGraph& g, Clustering& c, LocalEvaluator& evaluator,
                             long long max_moves);
ScoringOutcome scoring_phase(const IdentificationGraph& g, Clustering& c, const LcaConfig& cfg);

/// The LCA decision manager as a resumable state machine. All decisions are
/// functions of the persisted state, so a run saved at any review boundary
/// and reloaded continues exactly as the uninterrupted run would.
class LcaEngine {
 public:
  LcaEngine(std::vector<std::string> ids, LcaConfig cfg);

  /// Builds edges from ranker candidates and enters the weighting phase.
  void init_graph(const Ranker& ranker);

  /// Advances until convergence, a parked human request, the iteration
  /// limit, or `stop_after_reviews` new reviews in this call.
  RunStatus run(const Verifier& verifier, ReviewChannel& channel,
                std::optional<std::size_t> stop_after_reviews = std::nullopt);

  /// Records the answer to the parked request. Throws std::invalid_argument
  /// if nothing is parked or the id differs.
  void answer(const std::string& request_id, Decision d, ReviewSource source = ReviewSource::human);

  const LcaConfig& config() const { return cfg_; }
  const IdentificationGraph& graph() const { return graph_; }
  const Clustering& clustering() const { return clustering_; }
  const std::vector<ReviewDecision>& review_log() const { return log_; }
  const std::optional<ReviewRequest>& pending() const { return pending_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  RunPhase phase() const { return phase_; }
  RunStatus status() const { return status_; }
  RunResult result() const;
  ClusterAssignment assignment() const;
  long long score() const { return clustering_score(graph_, clustering_); }

  /// Current best alternative for every local clustering.
  std::vector<kernels::LocalEvaluation> evaluate();
  bool pair_exhausted(int u, int v) const;

  ojson to_json() const;
  static LcaEngine from_json(const nlohmann::json& j);

 private:
  void record(int u, int v, Decision d, ReviewSource s, double confidence, const std::string& request_id);
  std::string next_request_id() const;
  void trace(std::string event, long long margin = 0);

  LcaConfig cfg_;
  IdentificationGraph graph_;
  Clustering clustering_;
  std::vector<ReviewDecision> log_;
  std::vector<TraceEntry> trace_;
  std::vector<std::string> warnings_;
  std::optional<ReviewRequest> pending_;
  RunPhase phase_ = RunPhase::created;
  RunStatus status_ = RunStatus::running;
  std::uint64_t iterations_ = 0;
  LocalEvaluator evaluator_;
};

/// One line of the append-only review log.
ojson review_log_entry(const ReviewDecision& r);
/// Throws StateError (or a json exception) on malformed entries.
ReviewDecision review_from_log_entry(const nlohmann::json& j);

/// init -> weight -> scoring -> stability in one call.
RunResult run_lca(std::vector<std::string> ids, const Ranker& ranker, const Verifier& verifier,
                  ReviewChannel& channel, const LcaConfig& cfg);

}  // namespace census
