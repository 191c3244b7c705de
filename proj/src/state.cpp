#include "census/state.hpp"

#include <fstream>

namespace census {

using nlohmann::json;

void write_snapshot(const std::filesystem::path& path, const ojson& doc) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, doc.dump(1) + "\n");
  std::filesystem::rename(tmp, path);
}

json read_snapshot(const std::filesystem::path& path, std::string_view expected_kind) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IngestError& e) {
    throw StateError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StateError("corrupt state file " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer())
    throw StateError("state file " + path.string() + " has no format_version");
  if (j["format_version"].get<int>() != kStateFormatVersion)
    throw StateError("state file " + path.string() + " has unsupported format_version " + j["format_version"].dump());
  if (j.value("kind", "") != expected_kind)
    throw StateError("state file " + path.string() + " is not a " + std::string(expected_kind) + " snapshot");
  return j;
}

void save_dataset_state(const Dataset& d, const std::filesystem::path& path) {
  ojson j;
  j["format_version"] = kStateFormatVersion;
  j["kind"] = "dataset";
  j["dataset"] = dataset_to_json(d);
  write_snapshot(path, j);
}

Dataset load_dataset_state(const std::filesystem::path& path) {
  json j = read_snapshot(path, "dataset");
  try {
    return dataset_from_json(j.at("dataset"));
  } catch (const std::exception& e) {
    throw StateError(std::string("corrupt dataset snapshot: ") + e.what());
  }
}

void save_run_state(const LcaEngine& engine, const std::filesystem::path& path) {
  write_snapshot(path, engine.to_json());
}

LcaEngine load_run_state(const std::filesystem::path& path) {
  return LcaEngine::from_json(read_snapshot(path, "lca_run"));
}

ReviewLogFile::ReviewLogFile(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) written_ = read(path_).size();
}

void ReviewLogFile::sync(const std::vector<ReviewDecision>& log) {
  if (written_ > log.size()) throw StateError("review log file is ahead of the engine log");
  if (written_ == log.size()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path_.string());
  for (std::size_t i = written_; i < log.size(); ++i) out << review_log_entry(log[i]).dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("append failed: " + path_.string());
  written_ = log.size();
}

std::vector<ReviewDecision> ReviewLogFile::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<ReviewDecision> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      ReviewDecision r = review_from_log_entry(json::parse(line));
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw StateError("corrupt review log " + path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace census
