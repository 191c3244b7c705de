#include "census/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include "census/kernels.hpp"

namespace census {

void FilterConfig::validate() const {
  if (!(ca_threshold >= 0.0 && ca_threshold <= 1.0)) throw ConfigError("ca_threshold", "must lie in [0, 1]");
  if (blur_threshold && !(*blur_threshold >= 0.0)) throw ConfigError("blur_threshold", "must be >= 0");
  if (day_start < 0 || day_end > 86400 || !(day_start < day_end))
    throw ConfigError("day_start", "day window must satisfy 00:00 <= start < end <= 24:00");
  if (tz_offset_minutes < -14 * 60 || tz_offset_minutes > 14 * 60)
    throw ConfigError("tz_offset_minutes", "must lie within +-14 hours");
}

std::vector<Annotation> gate_viewpoint_species(std::span<const Annotation> annots, const FilterConfig& cfg) {
  std::vector<Annotation> out;
  for (const auto& a : annots)
    if (cfg.allowed_viewpoints.count(a.viewpoint) && cfg.allowed_species.count(a.species)) out.push_back(a);
  return out;
}

std::vector<Annotation> gate_daytime(std::span<const Annotation> annots, const FilterConfig& cfg) {
  std::vector<Annotation> out;
  for (const auto& a : annots) {
    int t = local_second_of_day(a.timestamp, cfg.tz_offset_minutes);
    if (t >= cfg.day_start && t < cfg.day_end) out.push_back(a);
  }
  return out;
}

std::vector<Encounter> cluster_encounters(std::span<const Annotation> annots, Exec exec) {
  return kernels::chain_encounters(annots, exec);
}

std::string elect_representative(std::span<const Annotation* const> members) {
  const Annotation* best = nullptr;
  for (const Annotation* a : members) {
    if (!best || a->ca_score > best->ca_score ||
        (a->ca_score == best->ca_score && a->annotation_id < best->annotation_id))
      best = a;
  }
  return best ? best->annotation_id : std::string{};
}

RepresentativeSelection select_representatives(std::span<const Encounter> encounters,
                                               std::span<const Annotation> annots) {
  std::unordered_map<std::string_view, const Annotation*> by_id;
  for (const auto& a : annots) by_id.emplace(a.annotation_id, &a);
  RepresentativeSelection out;
  for (const auto& enc : encounters) {
    std::vector<const Annotation*> members;
    for (const auto& id : enc.member_ids) {
      auto it = by_id.find(id);
      if (it != by_id.end()) members.push_back(it->second);
    }
    if (members.empty()) continue;
    std::string rep = elect_representative(members);
    for (const Annotation* m : members) {
      if (m->annotation_id == rep) out.representatives.push_back(*m);
      else out.discarded.push_back({m->annotation_id, "representatives", "not the best member of " + enc.encounter_id});
    }
  }
  std::sort(out.representatives.begin(), out.representatives.end(),
            [](const Annotation& x, const Annotation& y) { return x.annotation_id < y.annotation_id; });
  return out;
}

std::vector<Annotation> gate_ca_and_blur(std::span<const Annotation> annots, const FilterConfig& cfg,
                                         std::vector<Discard>* discarded) {
  std::vector<Annotation> out;
  auto drop = [&](const Annotation& a, const char* reason) {
    if (discarded) discarded->push_back({a.annotation_id, "ca_blur", reason});
  };
  for (const auto& a : annots) {
    if (cfg.enable_ca && !(a.ca_score > cfg.ca_threshold)) {
      drop(a, "ca_score at or below threshold");
      continue;
    }
    if (cfg.blur_threshold) {
      if (!a.blur_score) {
        drop(a, "missing blur score");
        continue;
      }
      if (*a.blur_score < *cfg.blur_threshold) {
        drop(a, "blur score below threshold");
        continue;
      }
    }
    out.push_back(a);
  }
  return out;
}

namespace {

std::vector<Discard> dropped(std::span<const Annotation> before, std::span<const Annotation> after,
                             const char* stage, const char* reason) {
  std::vector<std::string_view> kept;
  for (const auto& a : after) kept.push_back(a.annotation_id);
  std::sort(kept.begin(), kept.end());
  std::vector<Discard> out;
  for (const auto& a : before)
    if (!std::binary_search(kept.begin(), kept.end(), std::string_view(a.annotation_id)))
      out.push_back({a.annotation_id, stage, reason});
  return out;
}

}  // namespace

FunnelResult run_funnel(const Dataset& dataset, const FilterConfig& cfg, Exec exec) {
  cfg.validate();
  FunnelResult r;
  auto add_stage = [&](const char* name, std::size_t in, std::size_t out) {
    r.report.stages.push_back({name, in, out});
  };
  auto append = [&](std::vector<Discard> d) {
    r.discarded.insert(r.discarded.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  };

  std::vector<Annotation> current = dataset.annotations;
  std::sort(current.begin(), current.end(),
            [](const Annotation& x, const Annotation& y) { return x.annotation_id < y.annotation_id; });

  if (cfg.enable_viewpoint_species) {
    auto next = gate_viewpoint_species(current, cfg);
    append(dropped(current, next, "viewpoint_species", "viewpoint or species not allowed"));
    add_stage("viewpoint_species", current.size(), next.size());
    current = std::move(next);
  } else {
    add_stage("viewpoint_species", current.size(), current.size());
  }

  if (cfg.enable_daytime) {
    auto next = gate_daytime(current, cfg);
    append(dropped(current, next, "daytime", "outside the day window"));
    add_stage("daytime", current.size(), next.size());
    current = std::move(next);
  } else {
    add_stage("daytime", current.size(), current.size());
  }

  if (cfg.enable_encounters) {
    r.encounters = cluster_encounters(current, exec);
  } else {
    for (const auto& a : current) {
      Encounter e;
      e.camera_id = a.camera_id;
      e.minute_buckets = {epoch_minute(a.timestamp)};
      e.member_ids = {a.annotation_id};
      e.representative_id = a.annotation_id;
      e.start = a.timestamp;
      e.encounter_id = "enc-" + a.annotation_id;
      r.encounters.push_back(std::move(e));
    }
  }
  r.report.encounter_count = r.encounters.size();
  add_stage("encounters", current.size(), current.size());

  if (cfg.enable_representatives) {
    auto sel = select_representatives(r.encounters, current);
    add_stage("representatives", current.size(), sel.representatives.size());
    append(std::move(sel.discarded));
    current = std::move(sel.representatives);
  } else {
    add_stage("representatives", current.size(), current.size());
  }

  {
    std::vector<Discard> d;
    auto next = gate_ca_and_blur(current, cfg, &d);
    add_stage("ca_blur", current.size(), next.size());
    append(std::move(d));
    current = std::move(next);
  }

  for (const auto& a : current) r.report.final_ids.push_back(a.annotation_id);
  r.annotations = std::move(current);
  return r;
}

}  // namespace census
