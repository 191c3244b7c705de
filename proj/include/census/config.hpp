#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "census/json_io.hpp"
#include "census/lca.hpp"
#include "census/matchers.hpp"
#include "census/pipeline.hpp"
#include "census/sim.hpp"

namespace census {

// Everything a run needs besides its inputs. The file form is one
// `key = value` per line with `#` comments; keys mirror the field names
// (filter and LCA keys bare, simulation keys under `sim.`).
struct RunConfig {
  FilterConfig filter;
  LcaConfig lca;
  SimOracleParams oracle;
  SimConfig sim;
  std::optional<std::string> truth_path;
  bool chapman = false;

  void validate() const;
  /// Sets lca, oracle and simulation seeds together.
  void set_seed(std::uint64_t seed);
};

/// Throws ConfigError naming the key for unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

RunConfig parse_config_text(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Applies a JSON object of settings. Nested objects flatten to dotted keys,
/// arrays to comma lists.
void apply_config_json(RunConfig& cfg, const nlohmann::json& obj);

ojson run_config_to_json(const RunConfig& cfg);

}  // namespace census
