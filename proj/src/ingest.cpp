#include "census/ingest.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "census/hashing.hpp"
#include "census/json_io.hpp"

namespace census {

using nlohmann::json;

std::string_view to_string(Viewpoint v) {
  switch (v) {
    case Viewpoint::left: return "left";
    case Viewpoint::right: return "right";
    case Viewpoint::front_right: return "front-right";
    case Viewpoint::back_right: return "back-right";
    case Viewpoint::front: return "front";
    case Viewpoint::back: return "back";
    case Viewpoint::other: return "other";
  }
  return "other";
}

std::string_view to_string(Species s) {
  switch (s) {
    case Species::grevys: return "grevys";
    case Species::plains: return "plains";
    case Species::other: return "other";
  }
  return "other";
}

std::string_view to_string(Source s) {
  return s == Source::camera_trap ? "camera_trap" : "field_photo";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random_grid: return "random_grid";
    case Strategy::roadside_known: return "roadside_known";
    case Strategy::roadside_random: return "roadside_random";
    case Strategy::magnet_motion: return "magnet_motion";
    case Strategy::magnet_timelapse: return "magnet_timelapse";
  }
  return "random_grid";
}

Viewpoint viewpoint_from_string(std::string_view s) {
  for (auto v : {Viewpoint::left, Viewpoint::right, Viewpoint::front_right, Viewpoint::back_right,
                 Viewpoint::front, Viewpoint::back})
    if (to_string(v) == s) return v;
  return Viewpoint::other;
}

Species species_from_string(std::string_view s) {
  if (s == "grevys") return Species::grevys;
  if (s == "plains") return Species::plains;
  return Species::other;
}

std::optional<Source> source_from_string(std::string_view s) {
  if (s == "camera_trap") return Source::camera_trap;
  if (s == "field_photo") return Source::field_photo;
  return std::nullopt;
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (auto v : kAllStrategies)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

const Camera* Dataset::find_camera(std::string_view id) const {
  for (const auto& c : cameras)
    if (c.camera_id == id) return &c;
  return nullptr;
}

const Annotation* Dataset::find_annotation(std::string_view id) const {
  for (const auto& a : annotations)
    if (a.annotation_id == id) return &a;
  return nullptr;
}

namespace {

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw std::invalid_argument(std::string("missing required field ") + key);
  if (!it->is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
  std::string v = it->get<std::string>();
  if (v.empty()) throw std::invalid_argument(std::string(key) + " must not be empty");
  return v;
}

double require_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw std::invalid_argument(std::string("missing required field ") + key);
  if (!it->is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
  return it->get<double>();
}

std::optional<double> optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
  return it->get<double>();
}

}  // namespace

Annotation annotation_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  Annotation a;
  a.annotation_id = require_string(j, "annotation_id");
  a.image_id = require_string(j, "image_id");
  a.camera_id = require_string(j, "camera_id");
  auto ts = parse_iso8601(require_string(j, "timestamp"));
  if (!ts) throw std::invalid_argument("unparsable timestamp");
  a.timestamp = *ts;
  a.viewpoint = viewpoint_from_string(require_string(j, "viewpoint"));
  a.species = species_from_string(require_string(j, "species"));
  a.ca_score = require_number(j, "ca_score");
  if (!(a.ca_score >= 0.0 && a.ca_score <= 1.0)) throw std::invalid_argument("ca_score out of range");
  a.blur_score = optional_number(j, "blur_score");
  if (a.blur_score && !(*a.blur_score >= 0.0)) throw std::invalid_argument("blur_score out of range");
  auto lat = optional_number(j, "lat");
  auto lon = optional_number(j, "lon");
  if (lat.has_value() != lon.has_value()) throw std::invalid_argument("lat and lon must appear together");
  if (lat) {
    if (*lat < -90 || *lat > 90 || *lon < -180 || *lon > 180) throw std::invalid_argument("gps out of range");
    a.gps = GeoPoint{*lat, *lon};
  }
  if (auto it = j.find("crop_uri"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("crop_uri must be a string");
    a.crop_uri = it->get<std::string>();
  }
  if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("source must be a string");
    auto s = source_from_string(it->get<std::string>());
    if (!s) throw std::invalid_argument("unknown source");
    a.source = *s;
  }
  return a;
}

Camera camera_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("camera entry is not a JSON object");
  Camera c;
  c.camera_id = require_string(j, "camera_id");
  c.location.lat = require_number(j, "lat");
  c.location.lon = require_number(j, "lon");
  if (c.location.lat < -90 || c.location.lat > 90 || c.location.lon < -180 || c.location.lon > 180)
    throw std::invalid_argument("camera location out of range");
  auto s = strategy_from_string(require_string(j, "strategy"));
  if (!s) throw std::invalid_argument("unknown strategy");
  c.strategy = *s;
  return c;
}

ojson annotation_to_json(const Annotation& a) {
  ojson j;
  j["annotation_id"] = a.annotation_id;
  j["image_id"] = a.image_id;
  j["camera_id"] = a.camera_id;
  j["timestamp"] = format_iso8601_utc(a.timestamp);
  j["viewpoint"] = to_string(a.viewpoint);
  j["species"] = to_string(a.species);
  j["ca_score"] = a.ca_score;
  if (a.blur_score) j["blur_score"] = *a.blur_score;
  if (a.gps) {
    j["lat"] = a.gps->lat;
    j["lon"] = a.gps->lon;
  }
  if (a.crop_uri) j["crop_uri"] = *a.crop_uri;
  j["source"] = to_string(a.source);
  return j;
}

ojson camera_to_json(const Camera& c) {
  ojson j;
  j["camera_id"] = c.camera_id;
  j["lat"] = c.location.lat;
  j["lon"] = c.location.lon;
  j["strategy"] = to_string(c.strategy);
  return j;
}

ojson dataset_to_json(const Dataset& d) {
  ojson j;
  j["provenance"] = {{"manifest_path", d.provenance.manifest_path},
                     {"cameras_path", d.provenance.cameras_path},
                     {"digest", d.provenance.digest}};
  ojson cams = ojson::array();
  for (const auto& c : d.cameras) cams.push_back(camera_to_json(c));
  j["cameras"] = std::move(cams);
  ojson anns = ojson::array();
  for (const auto& a : d.annotations) anns.push_back(annotation_to_json(a));
  j["annotations"] = std::move(anns);
  return j;
}

Dataset dataset_from_json(const json& j) {
  Dataset d;
  try {
    const auto& p = j.at("provenance");
    d.provenance.manifest_path = p.at("manifest_path").get<std::string>();
    d.provenance.cameras_path = p.at("cameras_path").get<std::string>();
    d.provenance.digest = p.at("digest").get<std::string>();
    for (const auto& c : j.at("cameras")) d.cameras.push_back(camera_from_json(c));
    for (const auto& a : j.at("annotations")) d.annotations.push_back(annotation_from_json(a));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("invalid dataset record: ") + e.what());
  }
  return d;
}

ParseResult parse_manifest_text(std::string_view manifest, std::string_view registry,
                                std::string_view manifest_name, std::string_view registry_name) {
  ParseResult out;
  json reg;
  try {
    reg = json::parse(registry);
  } catch (const json::parse_error& e) {
    throw IngestError(std::string(registry_name) + ": camera registry is not valid JSON: " + e.what());
  }
  if (!reg.is_array()) throw IngestError(std::string(registry_name) + ": camera registry must be a JSON array");

  std::set<std::string> camera_ids;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    try {
      Camera c = camera_from_json(reg[i]);
      if (!camera_ids.insert(c.camera_id).second) throw std::invalid_argument("duplicate camera_id");
      out.dataset.cameras.push_back(std::move(c));
    } catch (const std::invalid_argument& e) {
      out.rejected.push_back({std::string(registry_name), i + 1, e.what()});
    }
  }

  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < manifest.size()) {
    std::size_t end = manifest.find('\n', pos);
    if (end == std::string_view::npos) end = manifest.size();
    std::string_view line = manifest.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error&) {
        throw std::invalid_argument("malformed JSON");
      }
      Annotation a = annotation_from_json(j);
      if (!camera_ids.count(a.camera_id)) throw std::invalid_argument("dangling camera_id " + a.camera_id);
      if (!seen.insert(a.annotation_id).second) throw std::invalid_argument("duplicate annotation_id");
      out.dataset.annotations.push_back(std::move(a));
    } catch (const std::invalid_argument& e) {
      out.rejected.push_back({std::string(manifest_name), line_no, e.what()});
    }
  }
  std::string both(manifest);
  both.append(registry);
  out.dataset.provenance.digest = sha256_hex(both);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ParseResult parse_manifest(const std::filesystem::path& annotations_path,
                           const std::filesystem::path& cameras_path) {
  std::string manifest = read_file(annotations_path);
  std::string registry = read_file(cameras_path);
  ParseResult r = parse_manifest_text(manifest, registry, annotations_path.string(), cameras_path.string());
  r.dataset.provenance.manifest_path = annotations_path.string();
  r.dataset.provenance.cameras_path = cameras_path.string();
  return r;
}

std::string serialize_manifest(const std::vector<Annotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) {
    out += annotation_to_json(a).dump();
    out += '\n';
  }
  return out;
}

std::string serialize_cameras(const std::vector<Camera>& cameras) {
  ojson arr = ojson::array();
  for (const auto& c : cameras) arr.push_back(camera_to_json(c));
  return arr.dump(2) + "\n";
}

void write_manifest(const Dataset& d, const std::filesystem::path& annotations_path,
                    const std::filesystem::path& cameras_path) {
  write_file(annotations_path, serialize_manifest(d.annotations));
  write_file(cameras_path, serialize_cameras(d.cameras));
}

GroundTruth read_truth_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  GroundTruth truth;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw IngestError(path.string() + ":" + std::to_string(n) + ": expected two columns");
    std::string a = line.substr(0, comma);
    std::string b = line.substr(comma + 1);
    if (n == 1 && a == "annotation_id") continue;
    truth[a] = b;
  }
  return truth;
}

std::string serialize_truth_csv(const GroundTruth& truth) {
  std::string out = "annotation_id,individual_id\n";
  for (const auto& [a, i] : truth) out += a + "," + i + "\n";
  return out;
}

}  // namespace census
