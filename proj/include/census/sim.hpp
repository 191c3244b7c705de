#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "census/ingest.hpp"
#include "census/lca.hpp"

namespace census {

struct SimConfig {
  int individuals = 40;
  double transient_fraction = 0.2;   // present for only part of the study
  int plains_individuals = 5;        // non-target species sharing the cameras
  int cameras = 12;
  std::map<Strategy, double> strategy_mix{{Strategy::random_grid, 1.0},
                                          {Strategy::roadside_known, 1.0},
                                          {Strategy::roadside_random, 1.0},
                                          {Strategy::magnet_motion, 1.0}};
  std::map<Strategy, double> rate_multiplier{{Strategy::random_grid, 1.0},
                                             {Strategy::roadside_known, 1.5},
                                             {Strategy::roadside_random, 1.0},
                                             {Strategy::magnet_motion, 4.0},
                                             {Strategy::magnet_timelapse, 4.0}};
  int study_days = 60;
  double base_rate = 0.01;       // encounters per camera, individual and day
  double home_range_km = 4.0;    // Gaussian distance decay scale; <= 0 disables
  std::optional<int> exact_encounters;  // fixed count per (camera, individual)
  int burst_min = 1;
  int burst_max = 5;
  double night_fraction = 0.4;
  double allowed_view_fraction = 0.6;
  double good_fraction = 0.7;
  double good_ca_min = 0.5, good_ca_max = 1.0;
  double poor_ca_min = 0.0, poor_ca_max = 0.3;
  bool emit_blur = true;
  int tz_offset_minutes = 180;
  EpochSeconds study_start = 1451595600;  // 2016-01-01T00:00:00+03:00
  double lat_min = 0.28, lat_max = 0.45;
  double lon_min = 36.80, lon_max = 36.95;
  std::uint64_t seed = 1;

  void validate() const;
};

/// What the generator planted, used as an independent oracle.
struct PlantedEncounter {
  std::string camera_id;
  std::string individual_id;
  EpochSeconds start = 0;
  bool daytime = true;
  std::vector<std::string> annotation_ids;
};

struct SimOutput {
  Dataset dataset;
  GroundTruth truth;
  std::vector<PlantedEncounter> encounters;
  std::map<std::string, std::size_t> encounters_per_strategy;
  /// annotation_id -> 1 for the first half of the study, 2 for the second
  std::map<std::string, int> events;
};

/// Deterministic per seed. Throws ConfigError on infeasible configs.
SimOutput generate(const SimConfig& cfg);

struct EvalReport {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  double ari = 1.0;
  std::size_t predicted_clusters = 0;
  std::size_t true_clusters = 0;
  long long count_delta = 0;  // predicted - true
};

/// Pairwise precision/recall/F1 over same-cluster pairs and the adjusted
/// Rand index. Precision (recall) is 1.0 when no pairs are predicted
/// (truly) same. Throws std::invalid_argument on id-set mismatch.
EvalReport evaluate(const std::map<std::string, std::string>& predicted, const std::map<std::string, std::string>& truth);

std::string serialize_events_csv(const std::map<std::string, int>& events);

}  // namespace census
