#include "census/kernels.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace census::kernels {

RankingBatch rank_all(const Ranker& ranker, std::span<const std::string> ids, int k, Exec exec) {
  const auto n = static_cast<long long>(ids.size());
  RankingBatch out;
  out.lists.resize(ids.size());
  std::vector<std::string> errors(ids.size());

  auto body = [&](long long i) {
    try {
      out.lists[static_cast<std::size_t>(i)] = ranker.top_k(ids[static_cast<std::size_t>(i)], ids, k);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < n; ++i) body(i);
  } else {
    for (long long i = 0; i < n; ++i) body(i);
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!errors[i].empty()) {
      out.lists[i].clear();
      out.failures.push_back(ids[i] + ": " + errors[i]);
    }
  return out;
}

std::vector<VerificationResult> verify_pairs(const Verifier& verifier,
                                             std::span<const std::pair<std::string, std::string>> pairs,
                                             Exec exec, int attempt) {
  std::vector<VerificationResult> out(pairs.size());
  const auto n = static_cast<long long>(pairs.size());
  auto body = [&](long long i) {
    auto& slot = out[static_cast<std::size_t>(i)];
    try {
      const auto& p = pairs[static_cast<std::size_t>(i)];
      slot.value = verifier.verify(p.first, p.second, attempt);
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) body(i);
  } else {
    for (long long i = 0; i < n; ++i) body(i);
  }
  return out;
}

long long LocalEvaluation::margin() const {
  return best ? -best->delta : std::numeric_limits<long long>::max();
}

std::vector<LocalEvaluation> evaluate_local(const IdentificationGraph& g, const Clustering& c,
                                            std::span<const LocalClustering> locals, const AlternativeConfig& cfg,
                                            Exec exec) {
  std::vector<LocalEvaluation> out(locals.size());
  const auto n = static_cast<long long>(locals.size());
  auto body = [&](long long i) {
    const auto& lc = locals[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = {lc, best_alternative(g, c, lc, cfg)};
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long long i = 0; i < n; ++i) body(i);
  } else {
    for (long long i = 0; i < n; ++i) body(i);
  }
  return out;
}

std::vector<Encounter> chain_encounters(std::span<const Annotation> annots, Exec exec) {
  // group by camera; map keeps camera order deterministic
  std::map<std::string, std::vector<const Annotation*>> by_camera;
  for (const auto& a : annots) by_camera[a.camera_id].push_back(&a);
  std::vector<std::vector<const Annotation*>*> groups;
  groups.reserve(by_camera.size());
  for (auto& [_, v] : by_camera) groups.push_back(&v);

  std::vector<std::vector<Encounter>> per_camera(groups.size());
  const auto n = static_cast<long long>(groups.size());
  auto body = [&](long long gi) {
    auto& members = *groups[static_cast<std::size_t>(gi)];
    std::sort(members.begin(), members.end(), [](const Annotation* x, const Annotation* y) {
      auto mx = epoch_minute(x->timestamp), my = epoch_minute(y->timestamp);
      if (mx != my) return mx < my;
      return x->annotation_id < y->annotation_id;
    });
    auto& out = per_camera[static_cast<std::size_t>(gi)];
    std::size_t start = 0;
    while (start < members.size()) {
      std::size_t end = start + 1;
      while (end < members.size() &&
             epoch_minute(members[end]->timestamp) - epoch_minute(members[end - 1]->timestamp) <= 1)
        ++end;
      Encounter enc;
      enc.camera_id = members[start]->camera_id;
      enc.start = members[start]->timestamp;
      for (std::size_t i = start; i < end; ++i) {
        auto m = epoch_minute(members[i]->timestamp);
        if (enc.minute_buckets.empty() || enc.minute_buckets.back() != m) enc.minute_buckets.push_back(m);
        enc.member_ids.push_back(members[i]->annotation_id);
        enc.start = std::min(enc.start, members[i]->timestamp);
      }
      std::sort(enc.member_ids.begin(), enc.member_ids.end());
      enc.encounter_id = "enc-" + enc.camera_id + "-" + std::to_string(enc.minute_buckets.front());
      std::span<const Annotation* const> span(members.data() + start, end - start);
      enc.representative_id = elect_representative(span);
      out.push_back(std::move(enc));
      start = end;
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < n; ++i) body(i);
  } else {
    for (long long i = 0; i < n; ++i) body(i);
  }

  std::vector<Encounter> all;
  for (auto& v : per_camera)
    for (auto& e : v) all.push_back(std::move(e));
  std::sort(all.begin(), all.end(),
            [](const Encounter& x, const Encounter& y) { return x.encounter_id < y.encounter_id; });
  return all;
}

}  // namespace census::kernels
