#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "census/ingest.hpp"
#include "census/json_io.hpp"
#include "census/lca.hpp"
#include "census/pipeline.hpp"

namespace census {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CaptureSummary {
  long long n1 = 0;
  long long n2 = 0;
  long long m = 0;
  bool operator==(const CaptureSummary&) const = default;
};

struct PopulationEstimate {
  double n_hat = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

enum class Estimator { lincoln_petersen, chapman };

/// annotation_id -> sampling event (1 or 2)
using EventAssignment = std::map<std::string, int>;

/// Reads "annotation_id,event" rows; an optional header row is skipped.
EventAssignment read_events_csv(const std::filesystem::path& path);

/// Throws StatsError naming every clustered annotation without an event.
CaptureSummary capture_summary(const ClusterAssignment& clusters, const EventAssignment& event_of);

/// n = n1 n2 / m with variance n1 n2 (n1-m)(n2-m) / m^3 and a normal 95%
/// interval whose lower end is clamped at max(n1, n2). Chapman's variant
/// uses (n1+1)(n2+1)/(m+1) - 1. Throws StatsError when m = 0.
PopulationEstimate lincoln_petersen(const CaptureSummary& s, Estimator est = Estimator::lincoln_petersen);

/// algorithmic / (algorithmic + human); 1.0 when both are zero.
double automation_rate(std::size_t algorithmic, std::size_t human);
/// Percentage rounded to 0.1, e.g. "98.2%".
std::string format_rate(double rate);

struct ClusterStat {
  std::string cluster_id;
  std::size_t annotations = 0;
  std::size_t encounters = 0;
  std::size_t cameras = 0;
};

struct IndividualStats {
  std::vector<ClusterStat> clusters;
  double mean_encounters = 0.0;
  double mean_cameras = 0.0;
  std::map<std::size_t, std::size_t> encounters_histogram;  // encounters -> individuals
  std::map<std::size_t, std::size_t> cameras_histogram;
};

IndividualStats individual_stats(const ClusterAssignment& clusters, std::span<const Encounter> encounters,
                                 std::span<const Camera> cameras);

struct StrategyRow {
  Strategy strategy = Strategy::random_grid;
  std::size_t cameras = 0;
  std::size_t total = 0;         // distinct individuals seen by any camera of the strategy
  double avg = 0.0;              // mean distinct individuals per camera
  double new_avg = 0.0;          // mean first sightings per camera
  std::size_t new_total = 0;     // first sightings summed over the strategy's cameras
};

struct StrategyStats {
  std::vector<StrategyRow> rows;  // strategies with at least one registered camera
};

StrategyStats strategy_stats(const ClusterAssignment& clusters, std::span<const Encounter> encounters,
                             std::span<const Camera> cameras);

struct GeoJsonExport {
  ojson document;
  std::vector<std::string> warnings;
};

/// One Point feature per (cluster, encounter). `only` restricts the export
/// to the listed cluster ids; empty means every cluster.
GeoJsonExport export_geojson(const ClusterAssignment& clusters, std::span<const Encounter> encounters,
                             std::span<const Camera> cameras, const std::set<std::string>& only = {});

/// Rounds to `digits` decimals for reporting.
double round_to(double v, int digits);

}  // namespace census
