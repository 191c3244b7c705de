#include "census/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace census {

EventAssignment read_events_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  EventAssignment out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw StatsError(path.string() + ":" + std::to_string(n) + ": expected two columns");
    std::string id = line.substr(0, comma);
    std::string ev = line.substr(comma + 1);
    if (n == 1 && id == "annotation_id") continue;
    if (ev != "1" && ev != "2") throw StatsError(path.string() + ":" + std::to_string(n) + ": event must be 1 or 2");
    out[id] = ev == "1" ? 1 : 2;
  }
  return out;
}

CaptureSummary capture_summary(const ClusterAssignment& clusters, const EventAssignment& event_of) {
  std::map<std::string, unsigned> seen;  // bit 0: event 1, bit 1: event 2
  std::vector<std::string> missing;
  for (const auto& [ann, cluster] : clusters) {
    auto it = event_of.find(ann);
    if (it == event_of.end()) {
      missing.push_back(ann);
      continue;
    }
    seen[cluster] |= it->second == 1 ? 1u : 2u;
  }
  if (!missing.empty()) {
    std::string msg = "annotations without an event assignment:";
    for (const auto& m : missing) msg += " " + m;
    throw StatsError(msg);
  }
  CaptureSummary s;
  for (const auto& [_, bits] : seen) {
    if (bits & 1u) ++s.n1;
    if (bits & 2u) ++s.n2;
    if (bits == 3u) ++s.m;
  }
  return s;
}

PopulationEstimate lincoln_petersen(const CaptureSummary& s, Estimator est) {
  if (s.n1 < 0 || s.n2 < 0 || s.m < 0 || s.m > std::min(s.n1, s.n2))
    throw StatsError("capture summary violates 0 <= m <= min(n1, n2)");
  const double n1 = static_cast<double>(s.n1);
  const double n2 = static_cast<double>(s.n2);
  const double m = static_cast<double>(s.m);
  PopulationEstimate e;
  double var = 0.0;
  if (est == Estimator::chapman) {
    e.n_hat = (n1 + 1) * (n2 + 1) / (m + 1) - 1;
    var = (n1 + 1) * (n2 + 1) * (n1 - m) * (n2 - m) / ((m + 1) * (m + 1) * (m + 2));
  } else {
    if (s.m == 0) throw StatsError("no individuals recaptured (m = 0): estimate undefined");
    e.n_hat = n1 * n2 / m;
    var = n1 * n2 * (n1 - m) * (n2 - m) / (m * m * m);
  }
  e.std_error = std::sqrt(var);
  e.ci_low = std::max(e.n_hat - 1.96 * e.std_error, std::max(n1, n2));
  e.ci_high = e.n_hat + 1.96 * e.std_error;
  e.ci_low = std::min(e.ci_low, e.n_hat);
  return e;
}

double automation_rate(std::size_t algorithmic, std::size_t human) {
  const std::size_t total = algorithmic + human;
  return total == 0 ? 1.0 : static_cast<double>(algorithmic) / static_cast<double>(total);
}

std::string format_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", round_to(rate * 100.0, 1));
  return buf;
}

double round_to(double v, int digits) {
  const double f = std::pow(10.0, digits);
  return std::round(v * f) / f;
}

namespace {

std::unordered_map<std::string_view, const Encounter*> encounter_index(std::span<const Encounter> encounters) {
  std::unordered_map<std::string_view, const Encounter*> idx;
  for (const auto& e : encounters)
    for (const auto& m : e.member_ids) idx.emplace(m, &e);
  return idx;
}

const Encounter& encounter_of(const std::unordered_map<std::string_view, const Encounter*>& idx,
                              const std::string& ann) {
  auto it = idx.find(ann);
  if (it == idx.end()) throw StatsError("annotation " + ann + " belongs to no encounter");
  return *it->second;
}

}  // namespace

IndividualStats individual_stats(const ClusterAssignment& clusters, std::span<const Encounter> encounters,
                                 std::span<const Camera> /*cameras*/) {
  auto idx = encounter_index(encounters);
  std::map<std::string, std::set<std::string>> encs, cams;
  std::map<std::string, std::size_t> sizes;
  for (const auto& [ann, cluster] : clusters) {
    const Encounter& e = encounter_of(idx, ann);
    encs[cluster].insert(e.encounter_id);
    cams[cluster].insert(e.camera_id);
    ++sizes[cluster];
  }
  IndividualStats out;
  double se = 0, sc = 0;
  for (const auto& [cluster, set] : encs) {
    ClusterStat cs{cluster, sizes[cluster], set.size(), cams[cluster].size()};
    se += static_cast<double>(cs.encounters);
    sc += static_cast<double>(cs.cameras);
    ++out.encounters_histogram[cs.encounters];
    ++out.cameras_histogram[cs.cameras];
    out.clusters.push_back(std::move(cs));
  }
  if (!out.clusters.empty()) {
    out.mean_encounters = se / static_cast<double>(out.clusters.size());
    out.mean_cameras = sc / static_cast<double>(out.clusters.size());
  }
  return out;
}

StrategyStats strategy_stats(const ClusterAssignment& clusters, std::span<const Encounter> encounters,
                             std::span<const Camera> cameras) {
  auto idx = encounter_index(encounters);
  std::map<std::string, std::set<std::string>> seen_by_camera;           // camera -> individuals
  std::map<std::string, std::pair<EpochSeconds, std::string>> first;     // individual -> (time, camera)
  for (const auto& [ann, cluster] : clusters) {
    const Encounter& e = encounter_of(idx, ann);
    seen_by_camera[e.camera_id].insert(cluster);
    std::pair<EpochSeconds, std::string> sighting{e.start, e.camera_id};
    auto it = first.find(cluster);
    if (it == first.end() || sighting < it->second) first[cluster] = sighting;
  }
  std::map<std::string, std::size_t> firsts_by_camera;
  for (const auto& [_, s] : first) ++firsts_by_camera[s.second];

  StrategyStats out;
  for (Strategy st : kAllStrategies) {
    StrategyRow row;
    row.strategy = st;
    std::set<std::string> all;
    std::size_t sum_seen = 0;
    for (const auto& cam : cameras) {
      if (cam.strategy != st) continue;
      ++row.cameras;
      auto it = seen_by_camera.find(cam.camera_id);
      if (it != seen_by_camera.end()) {
        all.insert(it->second.begin(), it->second.end());
        sum_seen += it->second.size();
      }
      auto f = firsts_by_camera.find(cam.camera_id);
      if (f != firsts_by_camera.end()) row.new_total += f->second;
    }
    if (row.cameras == 0) continue;
    row.total = all.size();
    row.avg = static_cast<double>(sum_seen) / static_cast<double>(row.cameras);
    row.new_avg = static_cast<double>(row.new_total) / static_cast<double>(row.cameras);
    out.rows.push_back(row);
  }
  return out;
}

GeoJsonExport export_geojson(const ClusterAssignment& clusters, std::span<const Encounter> encounters,
                             std::span<const Camera> cameras, const std::set<std::string>& only) {
  auto idx = encounter_index(encounters);
  std::map<std::string_view, const Camera*> cams;
  for (const auto& c : cameras) cams.emplace(c.camera_id, &c);

  // (cluster, encounter) pairs in a stable order
  std::set<std::pair<std::string, const Encounter*>> sightings;
  for (const auto& [ann, cluster] : clusters) {
    if (!only.empty() && !only.count(cluster)) continue;
    sightings.emplace(cluster, &encounter_of(idx, ann));
  }
  std::vector<std::pair<std::string, const Encounter*>> ordered(sightings.begin(), sightings.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return x.second->encounter_id < y.second->encounter_id;
  });

  GeoJsonExport out;
  ojson features = ojson::array();
  for (const auto& [cluster, enc] : ordered) {
    auto it = cams.find(enc->camera_id);
    if (it == cams.end()) {
      out.warnings.push_back("camera " + enc->camera_id + " has no coordinates; skipped " + enc->encounter_id);
      continue;
    }
    const Camera& cam = *it->second;
    ojson f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Point"}, {"coordinates", {cam.location.lon, cam.location.lat}}};
    f["properties"] = {{"cluster_id", cluster},
                       {"encounter_id", enc->encounter_id},
                       {"camera_id", cam.camera_id},
                       {"timestamp", format_iso8601_utc(enc->start)},
                       {"strategy", to_string(cam.strategy)}};
    features.push_back(std::move(f));
  }
  out.document["type"] = "FeatureCollection";
  out.document["features"] = std::move(features);
  return out;
}

}  // namespace census
