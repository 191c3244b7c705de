#pragma once

#include <filesystem>

#include "census/ingest.hpp"
#include "census/json_io.hpp"
#include "census/lca.hpp"

namespace census {

// Snapshots are single JSON documents with a top-level "format_version".
// Writes go to a temporary sibling first and are renamed into place.

void save_dataset_state(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset_state(const std::filesystem::path& path);

void save_run_state(const LcaEngine& engine, const std::filesystem::path& path);
LcaEngine load_run_state(const std::filesystem::path& path);

/// Parses and version-checks a snapshot; throws StateError.
nlohmann::json read_snapshot(const std::filesystem::path& path, std::string_view expected_kind);
void write_snapshot(const std::filesystem::path& path, const ojson& doc);

/// Appends review log entries not yet present in the file. The file is the
/// audit trail; its line count always equals the engine's log length after
/// sync().
class ReviewLogFile {
 public:
  explicit ReviewLogFile(std::filesystem::path path);
  void sync(const std::vector<ReviewDecision>& log);
  std::size_t lines() const { return written_; }
  static std::vector<ReviewDecision> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::size_t written_ = 0;
};

}  // namespace census
