#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "census/ingest.hpp"

namespace census {

enum class Decision { same, different, incomparable };

std::string_view to_string(Decision d);
std::optional<Decision> decision_from_string(std::string_view s);

struct RankedCandidate {
  std::string annotation_id;
  double score = 0.0;
  bool operator==(const RankedCandidate&) const = default;
};

/// Candidate retrieval. Implementations return at most k ids drawn from
/// `candidates`, never the query itself, sorted by descending score with
/// ties broken by ascending id.
class Ranker {
 public:
  virtual ~Ranker() = default;
  virtual std::vector<RankedCandidate> top_k(std::string_view query, std::span<const std::string> candidates,
                                             int k) const = 0;
};

struct Verification {
  Decision decision = Decision::incomparable;
  double confidence = 0.5;  // probability that the pair shows the same animal
};

/// Pairwise verification. Must be symmetric in its arguments. `attempt` is
/// 1 for the first algorithmic look at a pair, 2 for the second.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual Verification verify(std::string_view a, std::string_view b, int attempt) const = 0;
  Verification verify(std::string_view a, std::string_view b) const { return verify(a, b, 1); }
};

/// A human (or stand-in) answering pair comparisons. `attempt` is 1 for the
/// first human look at a pair, 2 for the second, and so on.
class HumanReviewer {
 public:
  virtual ~HumanReviewer() = default;
  virtual Decision review(std::string_view a, std::string_view b, int attempt) const = 0;
};

class OracleError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct SimOracleParams {
  double ranker_jitter = 0.02;
  double verifier_flip_rate = 0.0;
  double verifier_incomparable_rate = 0.0;
  double verifier_confidence_band = 0.2;  // width of the confidence band; 0 means certain answers
  double human_error_rate = 0.02;
  double human_incomparable_rate = 0.01;
  int feature_dim = 64;
  double feature_noise = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ground truth plus a latent feature per annotation: one random unit
/// vector per individual, perturbed and renormalised per annotation.
/// Every draw is keyed on (seed, ids) so results do not depend on call order.
class SimOracleModel {
 public:
  SimOracleModel(GroundTruth truth, SimOracleParams params);

  const SimOracleParams& params() const { return params_; }
  const GroundTruth& truth() const { return truth_; }
  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

  /// Throws OracleError for unknown ids.
  bool same_individual(std::string_view a, std::string_view b) const;
  /// Inner product of latent features.
  double feature_similarity(std::string_view a, std::string_view b) const;
  /// Feature similarity plus symmetric, pair-keyed Gaussian jitter.
  double similarity(std::string_view a, std::string_view b) const;

  /// Key for draws tied to an unordered pair.
  std::uint64_t pair_key(std::string_view a, std::string_view b, std::uint64_t salt) const;

 private:
  std::size_t index(std::string_view id) const;

  GroundTruth truth_;
  SimOracleParams params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> individual_of_;
  std::vector<double> features_;  // row-major, feature_dim per annotation
};

class SimRanker final : public Ranker {
 public:
  explicit SimRanker(const SimOracleModel& model) : model_(model) {}
  std::vector<RankedCandidate> top_k(std::string_view query, std::span<const std::string> candidates,
                                     int k) const override;

 private:
  const SimOracleModel& model_;
};

/// Returns the true relation with a confidence in [1 - band, 1] (same) or
/// [0, band] (different); with probability flip_rate the sign is reversed.
class SimVerifier final : public Verifier {
 public:
  explicit SimVerifier(const SimOracleModel& model) : model_(model) {}
  using Verifier::verify;
  Verification verify(std::string_view a, std::string_view b, int attempt) const override;

 private:
  const SimOracleModel& model_;
};

class SimHuman final : public HumanReviewer {
 public:
  explicit SimHuman(const SimOracleModel& model) : model_(model) {}
  Decision review(std::string_view a, std::string_view b, int attempt) const override;

 private:
  const SimOracleModel& model_;
};

/// Sorts by descending score, then ascending id, and truncates to k.
void finalize_ranking(std::vector<RankedCandidate>& ranked, int k);

}  // namespace census
