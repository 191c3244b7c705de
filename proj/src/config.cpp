#include "census/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace census {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  while (!v.empty()) {
    auto comma = v.find(',');
    auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

long long to_int(std::string_view key, std::string_view v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  return out;
}

int to_int32(std::string_view key, std::string_view v) {
  long long x = to_int(key, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(std::string(key), "out of range");
  return static_cast<int>(x);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(std::string(key), "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  std::string s(v);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(out))
    throw ConfigError(std::string(key), "expected a number, got '" + s + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

int to_clock(std::string_view key, std::string_view v) {
  auto secs = parse_clock(v);
  if (!secs) throw ConfigError(std::string(key), "expected HH:MM[:SS], got '" + std::string(v) + "'");
  return *secs;
}

std::string clock_string(int secs) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", secs / 3600, secs / 60 % 60, secs % 60);
  return buf;
}

Strategy to_strategy(std::string_view key, std::string_view v) {
  auto s = strategy_from_string(v);
  if (!s) throw ConfigError(std::string(key), "unknown strategy '" + std::string(v) + "'");
  return *s;
}

}  // namespace

void RunConfig::validate() const {
  filter.validate();
  lca.validate();
  oracle.validate();
  sim.validate();
}

void RunConfig::set_seed(std::uint64_t seed) {
  lca.seed = seed;
  oracle.seed = seed;
  sim.seed = seed;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string k(key);
  const std::string_view v = trim(raw);
  auto& f = c.filter;
  auto& l = c.lca;
  auto& o = c.oracle;
  auto& s = c.sim;

  if (k == "top_k") l.top_k = to_int32(k, v);
  else if (k == "human_weight") l.human_weight = to_int32(k, v);
  else if (k == "stability_margin") l.stability_margin = to_int32(k, v);
  else if (k == "max_algo_reviews_per_pair") l.max_algo_reviews_per_pair = to_int32(k, v);
  else if (k == "max_human_reviews_per_pair") l.max_human_reviews_per_pair = to_int32(k, v);
  else if (k == "max_iterations") l.max_iterations = to_int(k, v);
  else if (k == "exhaustive_split_limit") l.exhaustive_split_limit = to_int32(k, v);
  else if (k == "seed") c.set_seed(to_u64(k, v));
  else if (k == "exec") {
    if (v == "serial") l.exec = Exec::serial;
    else if (v == "parallel") l.exec = Exec::parallel;
    else throw ConfigError(k, "expected serial or parallel");
  }
  else if (k == "allowed_viewpoints") {
    f.allowed_viewpoints.clear();
    for (const auto& item : split_list(v)) {
      Viewpoint vp = viewpoint_from_string(item);
      if (vp == Viewpoint::other && item != "other") throw ConfigError(k, "unknown viewpoint '" + item + "'");
      f.allowed_viewpoints.insert(vp);
    }
  }
  else if (k == "allowed_species") {
    f.allowed_species.clear();
    for (const auto& item : split_list(v)) {
      Species sp = species_from_string(item);
      if (sp == Species::other && item != "other") throw ConfigError(k, "unknown species '" + item + "'");
      f.allowed_species.insert(sp);
    }
  }
  else if (k == "day_start") f.day_start = to_clock(k, v);
  else if (k == "day_end") f.day_end = to_clock(k, v);
  else if (k == "tz_offset_minutes") f.tz_offset_minutes = to_int32(k, v);
  else if (k == "ca_threshold") f.ca_threshold = to_double(k, v);
  else if (k == "blur_threshold") {
    if (v == "none" || v.empty()) f.blur_threshold.reset();
    else f.blur_threshold = to_double(k, v);
  }
  else if (k == "enable_viewpoint_species") f.enable_viewpoint_species = to_bool(k, v);
  else if (k == "enable_daytime") f.enable_daytime = to_bool(k, v);
  else if (k == "enable_encounters") f.enable_encounters = to_bool(k, v);
  else if (k == "enable_representatives") f.enable_representatives = to_bool(k, v);
  else if (k == "enable_ca") f.enable_ca = to_bool(k, v);
  else if (k == "ranker_jitter") o.ranker_jitter = to_double(k, v);
  else if (k == "verifier_flip_rate") o.verifier_flip_rate = to_double(k, v);
  else if (k == "verifier_incomparable_rate") o.verifier_incomparable_rate = to_double(k, v);
  else if (k == "verifier_confidence_band") o.verifier_confidence_band = to_double(k, v);
  else if (k == "human_error_rate") o.human_error_rate = to_double(k, v);
  else if (k == "human_incomparable_rate") o.human_incomparable_rate = to_double(k, v);
  else if (k == "feature_dim") o.feature_dim = to_int32(k, v);
  else if (k == "feature_noise") o.feature_noise = to_double(k, v);
  else if (k == "truth_path") c.truth_path = v.empty() || v == "none" ? std::nullopt : std::optional<std::string>(v);
  else if (k == "chapman") c.chapman = to_bool(k, v);
  else if (k == "sim.individuals") s.individuals = to_int32(k, v);
  else if (k == "sim.transient_fraction") s.transient_fraction = to_double(k, v);
  else if (k == "sim.plains_individuals") s.plains_individuals = to_int32(k, v);
  else if (k == "sim.cameras") s.cameras = to_int32(k, v);
  else if (k == "sim.study_days") s.study_days = to_int32(k, v);
  else if (k == "sim.base_rate") s.base_rate = to_double(k, v);
  else if (k == "sim.home_range_km") s.home_range_km = to_double(k, v);
  else if (k == "sim.exact_encounters") {
    if (v == "none" || v.empty()) s.exact_encounters.reset();
    else s.exact_encounters = to_int32(k, v);
  }
  else if (k == "sim.burst_min") s.burst_min = to_int32(k, v);
  else if (k == "sim.burst_max") s.burst_max = to_int32(k, v);
  else if (k == "sim.night_fraction") s.night_fraction = to_double(k, v);
  else if (k == "sim.allowed_view_fraction") s.allowed_view_fraction = to_double(k, v);
  else if (k == "sim.good_fraction") s.good_fraction = to_double(k, v);
  else if (k == "sim.emit_blur") s.emit_blur = to_bool(k, v);
  else if (k == "sim.seed") s.seed = to_u64(k, v);
  else if (k.rfind("sim.mix.", 0) == 0) s.strategy_mix[to_strategy(k, k.substr(8))] = to_double(k, v);
  else if (k.rfind("sim.multiplier.", 0) == 0) s.rate_multiplier[to_strategy(k, k.substr(15))] = to_double(k, v);
  else throw ConfigError(k, "unknown configuration key");
}

RunConfig parse_config_text(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view l = line;
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(n), "expected key = value");
    apply_setting(base, trim(l.substr(0, eq)), l.substr(eq + 1));
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return parse_config_text(read_file(path), std::move(base));
}

namespace {

void apply_flat(RunConfig& cfg, const std::string& prefix, const json& obj) {
  for (const auto& [k, v] : obj.items()) {
    const std::string key = prefix + k;
    if (v.is_object()) {
      apply_flat(cfg, key + ".", v);
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& item : v) {
        if (!joined.empty()) joined += ",";
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      apply_setting(cfg, key, joined);
    } else if (v.is_string()) {
      apply_setting(cfg, key, v.get<std::string>());
    } else if (v.is_null()) {
      apply_setting(cfg, key, "none");
    } else {
      apply_setting(cfg, key, v.dump());
    }
  }
}

}  // namespace

void apply_config_json(RunConfig& cfg, const json& obj) {
  if (!obj.is_object()) throw ConfigError("config", "expected a JSON object");
  apply_flat(cfg, "", obj);
  cfg.validate();
}

ojson run_config_to_json(const RunConfig& c) {
  ojson j;
  ojson lca = lca_config_to_json(c.lca);
  for (auto& [k, v] : lca.items()) j[k] = v;
  j["exec"] = c.lca.exec == Exec::serial ? "serial" : "parallel";

  const auto& f = c.filter;
  ojson vps = ojson::array(), sps = ojson::array();
  for (auto vp : f.allowed_viewpoints) vps.push_back(to_string(vp));
  for (auto sp : f.allowed_species) sps.push_back(to_string(sp));
  j["allowed_viewpoints"] = std::move(vps);
  j["allowed_species"] = std::move(sps);
  j["day_start"] = clock_string(f.day_start);
  j["day_end"] = clock_string(f.day_end);
  j["tz_offset_minutes"] = f.tz_offset_minutes;
  j["ca_threshold"] = f.ca_threshold;
  j["blur_threshold"] = f.blur_threshold ? ojson(*f.blur_threshold) : ojson(nullptr);
  j["enable_viewpoint_species"] = f.enable_viewpoint_species;
  j["enable_daytime"] = f.enable_daytime;
  j["enable_encounters"] = f.enable_encounters;
  j["enable_representatives"] = f.enable_representatives;
  j["enable_ca"] = f.enable_ca;

  const auto& o = c.oracle;
  j["ranker_jitter"] = o.ranker_jitter;
  j["verifier_flip_rate"] = o.verifier_flip_rate;
  j["verifier_incomparable_rate"] = o.verifier_incomparable_rate;
  j["verifier_confidence_band"] = o.verifier_confidence_band;
  j["human_error_rate"] = o.human_error_rate;
  j["human_incomparable_rate"] = o.human_incomparable_rate;
  j["feature_dim"] = o.feature_dim;
  j["feature_noise"] = o.feature_noise;
  j["truth_path"] = c.truth_path ? ojson(*c.truth_path) : ojson(nullptr);
  j["chapman"] = c.chapman;

  const auto& s = c.sim;
  ojson sim;
  sim["individuals"] = s.individuals;
  sim["transient_fraction"] = s.transient_fraction;
  sim["plains_individuals"] = s.plains_individuals;
  sim["cameras"] = s.cameras;
  sim["study_days"] = s.study_days;
  sim["base_rate"] = s.base_rate;
  sim["home_range_km"] = s.home_range_km;
  sim["exact_encounters"] = s.exact_encounters ? ojson(*s.exact_encounters) : ojson(nullptr);
  sim["burst_min"] = s.burst_min;
  sim["burst_max"] = s.burst_max;
  sim["night_fraction"] = s.night_fraction;
  sim["allowed_view_fraction"] = s.allowed_view_fraction;
  sim["good_fraction"] = s.good_fraction;
  sim["emit_blur"] = s.emit_blur;
  sim["seed"] = s.seed;
  ojson mix, mult;
  for (const auto& [st, w] : s.strategy_mix) mix[std::string(to_string(st))] = w;
  for (const auto& [st, m] : s.rate_multiplier) mult[std::string(to_string(st))] = m;
  sim["mix"] = std::move(mix);
  sim["multiplier"] = std::move(mult);
  j["sim"] = std::move(sim);
  return j;
}

}  // namespace census
