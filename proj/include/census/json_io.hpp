#pragma once

#include <json.hpp>

#include "census/ingest.hpp"

namespace census {

using ojson = nlohmann::ordered_json;

ojson annotation_to_json(const Annotation& a);
ojson camera_to_json(const Camera& c);
ojson dataset_to_json(const Dataset& d);
/// Throws std::runtime_error on schema violations.
Dataset dataset_from_json(const nlohmann::json& j);

/// Strict record decoders shared by the manifest parser and snapshot loader.
/// Throws std::invalid_argument with a human readable reason.
Annotation annotation_from_json(const nlohmann::json& j);
Camera camera_from_json(const nlohmann::json& j);

}  // namespace census

namespace census {

/// Corrupt, truncated, or version-mismatched snapshot files.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kStateFormatVersion = 1;

}  // namespace census
