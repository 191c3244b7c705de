#pragma once

// Data-parallel hot loops. Each kernel has an OpenMP path and a serial
// reference path selected by Exec; results are written to per-index slots
// and merged in index order, so both paths return identical output.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "census/exec.hpp"
#include "census/graph.hpp"
#include "census/matchers.hpp"
#include "census/pipeline.hpp"

namespace census::kernels {

struct RankingBatch {
  std::vector<std::vector<RankedCandidate>> lists;  // one per query, same order as ids
  std::vector<std::string> failures;                // "<id>: <message>" for queries that threw
};

/// Runs ranker.top_k(id, ids, k) for every id.
RankingBatch rank_all(const Ranker& ranker, std::span<const std::string> ids, int k, Exec exec);

struct VerificationResult {
  std::optional<Verification> value;  // empty if the verifier threw
  std::string error;
};

std::vector<VerificationResult> verify_pairs(const Verifier& verifier,
                                             std::span<const std::pair<std::string, std::string>> pairs,
                                             Exec exec, int attempt = 1);

struct LocalEvaluation {
  LocalClustering local;
  std::optional<Alternative> best;

  /// current local score minus the best alternative's score
  long long margin() const;
};

std::vector<LocalEvaluation> evaluate_local(const IdentificationGraph& g, const Clustering& c,
                                            std::span<const LocalClustering> locals, const AlternativeConfig& cfg,
                                            Exec exec);

/// Per-camera consecutive-minute chaining. Encounters come back sorted by
/// encounter id with representatives elected.
std::vector<Encounter> chain_encounters(std::span<const Annotation> annots, Exec exec);

}  // namespace census::kernels
