#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "census/timeutil.hpp"

namespace census {

enum class Viewpoint { left, right, front_right, back_right, front, back, other };
enum class Species { grevys, plains, other };
enum class Source { camera_trap, field_photo };
enum class Strategy { random_grid, roadside_known, roadside_random, magnet_motion, magnet_timelapse };

std::string_view to_string(Viewpoint v);
std::string_view to_string(Species s);
std::string_view to_string(Source s);
std::string_view to_string(Strategy s);

/// Unknown names map to Viewpoint::other.
Viewpoint viewpoint_from_string(std::string_view s);
/// Unknown names map to Species::other.
Species species_from_string(std::string_view s);
std::optional<Source> source_from_string(std::string_view s);
std::optional<Strategy> strategy_from_string(std::string_view s);

inline constexpr Strategy kAllStrategies[] = {Strategy::random_grid, Strategy::roadside_known,
                                              Strategy::roadside_random, Strategy::magnet_motion,
                                              Strategy::magnet_timelapse};

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

struct Annotation {
  std::string annotation_id;
  std::string image_id;
  std::string camera_id;
  EpochSeconds timestamp = 0;
  Viewpoint viewpoint = Viewpoint::other;
  Species species = Species::other;
  double ca_score = 0.0;
  std::optional<double> blur_score;
  std::optional<GeoPoint> gps;
  std::optional<std::string> crop_uri;
  Source source = Source::camera_trap;

  bool operator==(const Annotation&) const = default;
};

struct Camera {
  std::string camera_id;
  GeoPoint location;
  Strategy strategy = Strategy::random_grid;

  bool operator==(const Camera&) const = default;
};

struct Provenance {
  std::string manifest_path;
  std::string cameras_path;
  std::string digest;  // sha256 over manifest bytes then registry bytes

  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  std::vector<Annotation> annotations;
  std::vector<Camera> cameras;
  Provenance provenance;

  const Camera* find_camera(std::string_view id) const;
  const Annotation* find_annotation(std::string_view id) const;
  bool same_content(const Dataset& o) const {
    return annotations == o.annotations && cameras == o.cameras;
  }
};

/// One rejected record. `line` is 1-based for the manifest and the array
/// index (1-based) for the camera registry.
struct LineError {
  std::string file;
  std::size_t line = 0;
  std::string reason;
};

struct ParseResult {
  Dataset dataset;
  std::vector<LineError> rejected;
};

/// Missing files, unreadable files, and a registry that is not a JSON array.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a JSON-lines annotation manifest and a JSON camera registry.
/// Bad records are dropped and reported; the rest are kept.
ParseResult parse_manifest(const std::filesystem::path& annotations_path,
                           const std::filesystem::path& cameras_path);

/// In-memory variant used by parse_manifest; names are only used in errors.
ParseResult parse_manifest_text(std::string_view manifest, std::string_view registry,
                                std::string_view manifest_name = "annotations",
                                std::string_view registry_name = "cameras");

std::string serialize_manifest(const std::vector<Annotation>& annotations);
std::string serialize_cameras(const std::vector<Camera>& cameras);

/// Writes both files; returns the dataset as parse_manifest would read it back.
void write_manifest(const Dataset& d, const std::filesystem::path& annotations_path,
                    const std::filesystem::path& cameras_path);

/// annotation_id -> individual_id
using GroundTruth = std::map<std::string, std::string>;

GroundTruth read_truth_csv(const std::filesystem::path& path);
std::string serialize_truth_csv(const GroundTruth& truth);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace census
