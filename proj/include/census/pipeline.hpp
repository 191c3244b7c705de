#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "census/exec.hpp"
#include "census/ingest.hpp"

namespace census {

/// Raised for invalid configuration values; `field` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct FilterConfig {
  std::set<Viewpoint> allowed_viewpoints{Viewpoint::right, Viewpoint::front_right, Viewpoint::back_right};
  std::set<Species> allowed_species{Species::grevys};
  int day_start = 6 * 3600 + 30 * 60;  // local seconds of day, inclusive
  int day_end = 19 * 3600;             // exclusive
  int tz_offset_minutes = 180;         // East Africa Time
  double ca_threshold = 0.31;          // strict: keep ca_score > threshold
  std::optional<double> blur_threshold;

  bool enable_viewpoint_species = true;
  bool enable_daytime = true;
  bool enable_encounters = true;
  bool enable_representatives = true;
  bool enable_ca = true;

  void validate() const;
};

struct Encounter {
  std::string encounter_id;
  std::string camera_id;
  std::vector<std::int64_t> minute_buckets;  // sorted, distinct
  std::vector<std::string> member_ids;       // sorted
  std::string representative_id;
  EpochSeconds start = 0;  // earliest member timestamp

  bool operator==(const Encounter&) const = default;
};

struct Discard {
  std::string annotation_id;
  std::string stage;
  std::string reason;
};

struct StageCount {
  std::string stage;
  std::size_t input = 0;
  std::size_t output = 0;
};

struct FunnelReport {
  std::vector<StageCount> stages;
  std::size_t encounter_count = 0;
  std::vector<std::string> final_ids;
};

struct FunnelResult {
  std::vector<Annotation> annotations;  // survivors, sorted by annotation_id
  std::vector<Encounter> encounters;    // every encounter formed, sorted by id
  std::vector<Discard> discarded;
  FunnelReport report;
};

std::vector<Annotation> gate_viewpoint_species(std::span<const Annotation> annots, const FilterConfig& cfg);
std::vector<Annotation> gate_daytime(std::span<const Annotation> annots, const FilterConfig& cfg);

/// Per camera, annotations whose epoch-minute buckets are linked through a
/// chain of occupied consecutive minutes share an encounter. Output is
/// sorted by encounter id and independent of input order.
std::vector<Encounter> cluster_encounters(std::span<const Annotation> annots, Exec exec = Exec::parallel);

/// Highest ca_score member of each encounter, ties to the smallest id.
std::string elect_representative(std::span<const Annotation* const> members);

struct RepresentativeSelection {
  std::vector<Annotation> representatives;
  std::vector<Discard> discarded;
};
RepresentativeSelection select_representatives(std::span<const Encounter> encounters,
                                               std::span<const Annotation> annots);

std::vector<Annotation> gate_ca_and_blur(std::span<const Annotation> annots, const FilterConfig& cfg,
                                         std::vector<Discard>* discarded = nullptr);

FunnelResult run_funnel(const Dataset& dataset, const FilterConfig& cfg, Exec exec = Exec::parallel);

}  // namespace census
