#include "census/matchers.hpp"

#include <algorithm>
#include <cmath>

#include "census/hashing.hpp"
#include "census/pipeline.hpp"

namespace census {

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::same: return "same";
    case Decision::different: return "different";
    case Decision::incomparable: return "incomparable";
  }
  return "incomparable";
}

std::optional<Decision> decision_from_string(std::string_view s) {
  if (s == "same") return Decision::same;
  if (s == "different") return Decision::different;
  if (s == "incomparable") return Decision::incomparable;
  return std::nullopt;
}

void SimOracleParams::validate() const {
  auto prob = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(name, "must lie in [0, 1]");
  };
  prob("verifier_flip_rate", verifier_flip_rate);
  prob("verifier_incomparable_rate", verifier_incomparable_rate);
  if (!(verifier_confidence_band >= 0.0 && verifier_confidence_band <= 0.5))
    throw ConfigError("verifier_confidence_band", "must lie in [0, 0.5]");
  prob("human_error_rate", human_error_rate);
  prob("human_incomparable_rate", human_incomparable_rate);
  if (human_error_rate + human_incomparable_rate > 1.0)
    throw ConfigError("human_error_rate", "error and incomparable rates sum above 1");
  if (!(ranker_jitter >= 0.0)) throw ConfigError("ranker_jitter", "must be >= 0");
  if (!(feature_noise >= 0.0)) throw ConfigError("feature_noise", "must be >= 0");
  if (feature_dim < 1) throw ConfigError("feature_dim", "must be >= 1");
}

namespace {

constexpr std::uint64_t kSaltIndividual = 0x11;
constexpr std::uint64_t kSaltAnnotation = 0x22;
constexpr std::uint64_t kSaltJitter = 0x33;
constexpr std::uint64_t kSaltVerifier = 0x44;
constexpr std::uint64_t kSaltHuman = 0x55;

void normalize(std::span<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

}  // namespace

SimOracleModel::SimOracleModel(GroundTruth truth, SimOracleParams params)
    : truth_(std::move(truth)), params_(params) {
  params_.validate();
  const auto dim = static_cast<std::size_t>(params_.feature_dim);
  features_.resize(truth_.size() * dim);
  individual_of_.reserve(truth_.size());
  std::unordered_map<std::string, std::vector<double>> base;
  std::size_t row = 0;
  for (const auto& [ann, ind] : truth_) {
    auto it = base.find(ind);
    if (it == base.end()) {
      std::vector<double> v(dim);
      KeyedStream rs(mix(params_.seed ^ kSaltIndividual, fnv1a(ind)));
      for (auto& x : v) x = rs.normal();
      normalize(v);
      it = base.emplace(ind, std::move(v)).first;
    }
    std::span<double> f(features_.data() + row * dim, dim);
    KeyedStream rs(mix(params_.seed ^ kSaltAnnotation, fnv1a(ann)));
    const double scale = params_.feature_noise / std::sqrt(static_cast<double>(dim));
    for (std::size_t d = 0; d < dim; ++d) f[d] = it->second[d] + scale * rs.normal();
    normalize(f);
    index_.emplace(ann, row);
    individual_of_.push_back(ind);
    ++row;
  }
}

std::size_t SimOracleModel::index(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw OracleError("unknown annotation id: " + std::string(id));
  return it->second;
}

bool SimOracleModel::same_individual(std::string_view a, std::string_view b) const {
  return individual_of_[index(a)] == individual_of_[index(b)];
}

double SimOracleModel::feature_similarity(std::string_view a, std::string_view b) const {
  const auto dim = static_cast<std::size_t>(params_.feature_dim);
  const double* fa = features_.data() + index(a) * dim;
  const double* fb = features_.data() + index(b) * dim;
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += fa[d] * fb[d];
  return s;
}

std::uint64_t SimOracleModel::pair_key(std::string_view a, std::string_view b, std::uint64_t salt) const {
  if (b < a) std::swap(a, b);
  return mix(mix(params_.seed ^ salt, fnv1a(a)), fnv1a(b));
}

double SimOracleModel::similarity(std::string_view a, std::string_view b) const {
  double s = feature_similarity(a, b);
  if (params_.ranker_jitter > 0.0) {
    KeyedStream rs(pair_key(a, b, kSaltJitter));
    s += params_.ranker_jitter * rs.normal();
  }
  return s;
}

void finalize_ranking(std::vector<RankedCandidate>& ranked, int k) {
  auto better = [](const RankedCandidate& x, const RankedCandidate& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.annotation_id < y.annotation_id;
  };
  const auto kk = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(k, 0)));
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(kk), ranked.end(), better);
  ranked.resize(kk);
}

std::vector<RankedCandidate> SimRanker::top_k(std::string_view query, std::span<const std::string> candidates,
                                              int k) const {
  if (k <= 0) return {};
  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c == query) continue;
    ranked.push_back({c, model_.similarity(query, c)});
  }
  finalize_ranking(ranked, k);
  return ranked;
}

Verification SimVerifier::verify(std::string_view a, std::string_view b, int attempt) const {
  if (a == b) throw std::invalid_argument("verify: identical annotation ids");
  if (attempt < 1) throw std::invalid_argument("verify: attempt must be at least 1");
  const bool same = model_.same_individual(a, b);
  const auto& p = model_.params();
  // repeat looks at a pair are independent draws
  const auto key = model_.pair_key(a, b, kSaltVerifier);
  KeyedStream rs(attempt == 1 ? key : mix(key, static_cast<std::uint64_t>(attempt)));
  const double u_inc = rs.uniform();
  const double u_flip = rs.uniform();
  const double u_conf = rs.uniform();
  if (u_inc < p.verifier_incomparable_rate) return {Decision::incomparable, 0.5};
  const bool reported_same = same != (u_flip < p.verifier_flip_rate);
  const double off = p.verifier_confidence_band * u_conf;
  if (reported_same) return {Decision::same, 1.0 - off};
  return {Decision::different, off};
}

Decision SimHuman::review(std::string_view a, std::string_view b, int attempt) const {
  if (a == b) throw std::invalid_argument("review: identical annotation ids");
  const bool same = model_.same_individual(a, b);
  const auto& p = model_.params();
  KeyedStream rs(mix(model_.pair_key(a, b, kSaltHuman), static_cast<std::uint64_t>(attempt)));
  const double u = rs.uniform();
  if (u < p.human_error_rate) return same ? Decision::different : Decision::same;
  if (u < p.human_error_rate + p.human_incomparable_rate) return Decision::incomparable;
  return same ? Decision::same : Decision::different;
}

}  // namespace census
