#include "census/cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "census/config.hpp"
#include "census/hashing.hpp"
#include "census/ingest.hpp"
#include "census/lca.hpp"
#include "census/matchers.hpp"
#include "census/pipeline.hpp"
#include "census/service.hpp"
#include "census/sim.hpp"
#include "census/state.hpp"
#include "census/stats.hpp"

namespace census {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::string manifest, cameras, db, config, events, out, geojson;
  std::string mode = "sim";
  std::optional<std::uint64_t> seed;
  int port = 8080;
  int lease_ttl = 120;
  bool json = false;
};

RunConfig load_run_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.set_seed(*o.seed);
  cfg.validate();
  return cfg;
}

Dataset load_dataset(const Options& o, std::ostream& err) {
  if (!o.manifest.empty() || !o.cameras.empty()) {
    if (o.manifest.empty() || o.cameras.empty()) throw UsageError("--manifest and --cameras go together");
    auto parsed = parse_manifest(o.manifest, o.cameras);
    for (const auto& r : parsed.rejected) err << "rejected " << r.file << ":" << r.line << ": " << r.reason << "\n";
    return std::move(parsed.dataset);
  }
  if (o.db.empty()) throw UsageError("need --db or --manifest with --cameras");
  const fs::path p = fs::path(o.db) / "dataset.json";
  if (!fs::exists(p)) throw UsageError("no dataset in " + o.db + "; run `census ingest` first");
  return load_dataset_state(p);
}

// Side files (truth.csv, events.csv) are looked up next to the manifest and
// then in the db directory.
std::optional<fs::path> side_file(const Dataset& d, const Options& o, const char* name) {
  if (!d.provenance.manifest_path.empty()) {
    fs::path p = fs::path(d.provenance.manifest_path).parent_path() / name;
    if (fs::exists(p)) return p;
  }
  if (!o.db.empty() && fs::exists(fs::path(o.db) / name)) return fs::path(o.db) / name;
  return std::nullopt;
}

std::optional<GroundTruth> load_truth(const RunConfig& cfg, const Dataset& d, const Options& o) {
  if (cfg.truth_path) return read_truth_csv(*cfg.truth_path);
  if (auto p = side_file(d, o, "truth.csv")) return read_truth_csv(*p);
  return std::nullopt;
}

std::optional<EventAssignment> load_events(const Dataset& d, const Options& o) {
  if (!o.events.empty()) return read_events_csv(o.events);
  if (auto p = side_file(d, o, "events.csv")) return read_events_csv(*p);
  return std::nullopt;
}

ojson funnel_json(const FunnelResult& f) {
  ojson j;
  ojson stages = ojson::array();
  for (const auto& s : f.report.stages) stages.push_back({{"stage", s.stage}, {"in", s.input}, {"out", s.output}});
  j["stages"] = std::move(stages);
  j["encounters"] = f.report.encounter_count;
  j["final"] = f.report.final_ids.size();
  return j;
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out << "  ";
      if (i == 0) out << std::left << std::setw(static_cast<int>(w[i])) << r[i];
      else out << std::right << std::setw(static_cast<int>(w[i])) << r[i];
    }
    out << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  out << std::string(total + 2 * (w.size() - 1), '-') << "\n";
  for (const auto& r : rows) line(r);
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_funnel(std::ostream& out, const FunnelReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.stages)
    rows.push_back({s.stage, std::to_string(s.input), std::to_string(s.output), std::to_string(s.input - s.output)});
  print_table(out, {"stage", "in", "out", "dropped"}, rows);
  out << "encounters: " << r.encounter_count << "\n";
}

ojson estimate_json(const CaptureSummary& s, const PopulationEstimate& e, bool chapman) {
  ojson j;
  j["estimator"] = chapman ? "chapman" : "lincoln_petersen";
  j["n1"] = s.n1;
  j["n2"] = s.n2;
  j["m"] = s.m;
  j["n_hat"] = round_to(e.n_hat, 3);
  j["std_error"] = round_to(e.std_error, 3);
  j["ci_low"] = round_to(e.ci_low, 3);
  j["ci_high"] = round_to(e.ci_high, 3);
  return j;
}

ojson estimate_or_error(const ClusterAssignment& a, const EventAssignment& events, bool chapman) {
  try {
    auto s = capture_summary(a, events);
    return estimate_json(s, lincoln_petersen(s, chapman ? Estimator::chapman : Estimator::lincoln_petersen), chapman);
  } catch (const StatsError& e) {
    return ojson{{"error", e.what()}};
  }
}

std::string run_status_label(const RunResult& r) { return std::string(to_string(r.status)); }

/// Report document shared by `cluster` and `report`. Keys are emitted in a
/// fixed order so identical runs produce identical bytes and digests.
ojson build_report(const Dataset& d, const RunConfig& cfg, const FunnelResult& funnel, const LcaEngine& engine,
                   const std::optional<GroundTruth>& truth, const std::optional<EventAssignment>& events) {
  const RunResult res = engine.result();
  ojson j;
  j["format_version"] = kStateFormatVersion;
  j["dataset"] = {{"annotations", d.annotations.size()}, {"cameras", d.cameras.size()}, {"digest", d.provenance.digest}};
  j["config"] = run_config_to_json(cfg);
  j["funnel"] = funnel_json(funnel);
  ojson run;
  run["status"] = run_status_label(res);
  run["converged"] = res.converged;
  run["clusters"] = res.cluster_count;
  run["algorithmic_reviews"] = res.algorithmic_reviews;
  run["human_reviews"] = res.human_reviews;
  run["total_reviews"] = res.total_reviews;
  run["automation_rate"] = round_to(res.automation_rate, 6);
  run["automation_rate_display"] = format_rate(res.automation_rate);
  run["iterations"] = res.trace.empty() ? 0 : res.trace.back().iteration;
  j["run"] = std::move(run);
  if (truth) {
    GroundTruth sub;
    std::set<std::string> seen;
    for (const auto& [id, _] : res.clustering) {
      auto it = truth->find(id);
      if (it == truth->end()) throw StatsError("annotation " + id + " has no ground truth");
      sub.emplace(id, it->second);
      seen.insert(it->second);
    }
    auto ev = evaluate(res.clustering, sub);
    j["evaluation"] = {{"precision", round_to(ev.precision, 6)},
                       {"recall", round_to(ev.recall, 6)},
                       {"f1", round_to(ev.f1, 6)},
                       {"ari", round_to(ev.ari, 6)},
                       {"seen_individuals", seen.size()},
                       {"count_delta", ev.count_delta}};
  } else {
    j["evaluation"] = nullptr;
  }
  j["estimate"] = events ? estimate_or_error(res.clustering, *events, cfg.chapman) : ojson(nullptr);
  auto ind = individual_stats(res.clustering, funnel.encounters, d.cameras);
  ojson enc_hist = ojson::object(), cam_hist = ojson::object();
  for (auto [k, v] : ind.encounters_histogram) enc_hist[std::to_string(k)] = v;
  for (auto [k, v] : ind.cameras_histogram) cam_hist[std::to_string(k)] = v;
  j["individuals"] = {{"mean_encounters", round_to(ind.mean_encounters, 4)},
                      {"mean_cameras", round_to(ind.mean_cameras, 4)},
                      {"encounters_histogram", std::move(enc_hist)},
                      {"cameras_histogram", std::move(cam_hist)}};
  ojson strategies = ojson::array();
  for (const auto& r : strategy_stats(res.clustering, funnel.encounters, d.cameras).rows)
    strategies.push_back({{"strategy", to_string(r.strategy)},
                          {"cameras", r.cameras},
                          {"total", r.total},
                          {"avg", round_to(r.avg, 4)},
                          {"new_avg", round_to(r.new_avg, 4)},
                          {"new_total", r.new_total}});
  j["strategies"] = std::move(strategies);
  ojson result;
  result["clustering"] = res.clustering;
  ojson log = ojson::array();
  for (const auto& r : engine.review_log()) log.push_back(review_log_entry(r));
  result["review_log"] = std::move(log);
  j["result_digest"] = sha256_hex(result.dump());
  j["digest"] = sha256_hex(j.dump());
  return j;
}

void print_report(std::ostream& out, const ojson& r) {
  out << "funnel\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r["funnel"]["stages"]) {
    auto in = s["in"].get<std::size_t>(), o = s["out"].get<std::size_t>();
    rows.push_back({s["stage"].get<std::string>(), std::to_string(in), std::to_string(o), std::to_string(in - o)});
  }
  print_table(out, {"stage", "in", "out", "dropped"}, rows);
  out << "encounters: " << r["funnel"]["encounters"].get<std::size_t>() << "\n\n";
  const auto& run = r["run"];
  out << "run: " << run["status"].get<std::string>() << ", " << run["clusters"].get<std::size_t>() << " clusters, "
      << run["algorithmic_reviews"].get<std::size_t>() << " algorithmic + " << run["human_reviews"].get<std::size_t>()
      << " human reviews, automation " << run["automation_rate_display"].get<std::string>() << "\n";
  if (!r["evaluation"].is_null()) {
    const auto& e = r["evaluation"];
    out << "evaluation: precision " << fixed(e["precision"].get<double>(), 4) << ", recall "
        << fixed(e["recall"].get<double>(), 4) << ", F1 " << fixed(e["f1"].get<double>(), 4) << ", ARI "
        << fixed(e["ari"].get<double>(), 4) << ", seen individuals " << e["seen_individuals"].get<std::size_t>()
        << "\n";
  }
  if (!r["estimate"].is_null()) {
    const auto& e = r["estimate"];
    if (e.contains("error")) {
      out << "estimate: " << e["error"].get<std::string>() << "\n";
    } else {
      out << "estimate: N = " << fixed(e["n_hat"].get<double>(), 1) << " +/- " << fixed(e["std_error"].get<double>(), 1)
          << " (95% CI " << fixed(e["ci_low"].get<double>(), 1) << " to " << fixed(e["ci_high"].get<double>(), 1)
          << "; n1 " << e["n1"].get<long long>() << ", n2 " << e["n2"].get<long long>() << ", m "
          << e["m"].get<long long>() << ")\n";
    }
  }
  if (!r["strategies"].empty()) {
    out << "\nstrategies\n";
    rows.clear();
    for (const auto& s : r["strategies"])
      rows.push_back({s["strategy"].get<std::string>(), std::to_string(s["cameras"].get<std::size_t>()),
                      std::to_string(s["total"].get<std::size_t>()), fixed(s["avg"].get<double>(), 2),
                      fixed(s["new_avg"].get<double>(), 2), std::to_string(s["new_total"].get<std::size_t>())});
    print_table(out, {"strategy", "cameras", "total", "avg", "new avg", "new total"}, rows);
  }
  out << "\ndigest: " << r["digest"].get<std::string>() << "\n";
}

void save_run(const fs::path& db, const LcaEngine& engine, const RunConfig& cfg) {
  ojson snap = engine.to_json();
  snap["run_config"] = run_config_to_json(cfg);
  write_snapshot(db / "run.json", snap);
  ReviewLogFile(db / "reviews.jsonl").sync(engine.review_log());
}

void write_geojson(const std::string& path, const LcaEngine& engine, const FunnelResult& funnel, const Dataset& d,
                   std::ostream& err) {
  auto geo = export_geojson(engine.assignment(), funnel.encounters, d.cameras);
  for (const auto& w : geo.warnings) err << "warning: " << w << "\n";
  write_file(path, geo.document.dump(1) + "\n");
}

std::optional<Decision> parse_answer(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  if (s == "s") return Decision::same;
  if (s == "d") return Decision::different;
  if (s == "i") return Decision::incomparable;
  return decision_from_string(s);
}

std::string describe(const Dataset& d, const std::string& id) {
  const Annotation* a = d.find_annotation(id);
  if (!a) return id;
  std::ostringstream s;
  s << id << " [" << a->camera_id << " " << format_iso8601_utc(a->timestamp) << " " << to_string(a->viewpoint)
    << " ca=" << fixed(a->ca_score, 2);
  if (a->crop_uri) s << " " << *a->crop_uri;
  s << "]";
  return s.str();
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("simulate needs --out DIR");
  RunConfig cfg = load_run_config(o);
  SimOutput sim = generate(cfg.sim);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_manifest(sim.dataset, dir / "annotations.jsonl", dir / "cameras.json");
  write_file(dir / "truth.csv", serialize_truth_csv(sim.truth));
  write_file(dir / "events.csv", serialize_events_csv(sim.events));
  std::set<std::string> individuals;
  for (const auto& [_, ind] : sim.truth) individuals.insert(ind);
  ojson j;
  j["annotations"] = sim.dataset.annotations.size();
  j["cameras"] = sim.dataset.cameras.size();
  j["encounters"] = sim.encounters.size();
  j["individuals_seen"] = individuals.size();
  j["encounters_per_strategy"] = sim.encounters_per_strategy;
  j["out"] = dir.string();
  if (o.json) {
    out << j.dump(1) << "\n";
  } else {
    out << "wrote " << sim.dataset.annotations.size() << " annotations from " << sim.encounters.size()
        << " encounters on " << sim.dataset.cameras.size() << " cameras to " << dir.string() << "\n";
  }
  return 0;
}

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.manifest.empty() || o.cameras.empty()) throw UsageError("ingest needs --manifest and --cameras");
  if (o.db.empty()) throw UsageError("ingest needs --db DIR");
  auto parsed = parse_manifest(o.manifest, o.cameras);
  for (const auto& r : parsed.rejected) err << "rejected " << r.file << ":" << r.line << ": " << r.reason << "\n";
  fs::create_directories(o.db);
  save_dataset_state(parsed.dataset, fs::path(o.db) / "dataset.json");
  if (o.json) {
    ojson j;
    j["accepted"] = parsed.dataset.annotations.size();
    j["cameras"] = parsed.dataset.cameras.size();
    ojson rej = ojson::array();
    for (const auto& r : parsed.rejected) rej.push_back({{"file", r.file}, {"line", r.line}, {"reason", r.reason}});
    j["rejected"] = std::move(rej);
    j["digest"] = parsed.dataset.provenance.digest;
    out << j.dump(1) << "\n";
  } else {
    out << "ingested " << parsed.dataset.annotations.size() << " annotations and " << parsed.dataset.cameras.size()
        << " cameras (" << parsed.rejected.size() << " rejected)\n";
  }
  return 0;
}

int cmd_filter(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(o);
  Dataset d = load_dataset(o, err);
  auto funnel = run_funnel(d, cfg.filter, cfg.lca.exec);
  ojson j = funnel_json(funnel);
  if (!o.db.empty()) {
    fs::create_directories(o.db);
    ojson snap = j;
    snap["final_ids"] = funnel.report.final_ids;
    write_file(fs::path(o.db) / "funnel.json", snap.dump(1) + "\n");
  }
  if (o.json) out << j.dump(1) << "\n";
  else print_funnel(out, funnel.report);
  return 0;
}

int cmd_cluster(const Options& o, std::istream& in, std::ostream& out, std::ostream& err) {
  if (o.mode != "sim" && o.mode != "interactive") throw UsageError("--mode must be sim or interactive");
  RunConfig cfg = load_run_config(o);
  Dataset d;
  std::optional<GroundTruth> truth;
  std::optional<EventAssignment> events;
  if (o.db.empty() && o.manifest.empty()) {
    if (o.mode == "interactive") throw UsageError("interactive mode needs --db so the session can be resumed");
    SimOutput sim = generate(cfg.sim);
    d = std::move(sim.dataset);
    truth = std::move(sim.truth);
    events = std::move(sim.events);
  } else {
    d = load_dataset(o, err);
    truth = load_truth(cfg, d, o);
    events = load_events(d, o);
  }
  if (!truth) throw ConfigError("truth_path", "the simulated oracles need ground truth (truth.csv)");

  auto funnel = run_funnel(d, cfg.filter, cfg.lca.exec);
  SimOracleModel model(*truth, cfg.oracle);
  SimRanker ranker(model);
  SimVerifier verifier(model);
  SimHuman human(model);

  const std::optional<fs::path> db = o.db.empty() ? std::nullopt : std::optional<fs::path>(o.db);
  std::optional<LcaEngine> engine;
  if (db && fs::exists(*db / "run.json")) {
    json prev = read_snapshot(*db / "run.json", "lca_run");
    const bool same_config = prev.contains("run_config") && prev["run_config"] == json(run_config_to_json(cfg));
    if (same_config && prev.value("phase", "") != "done") {
      engine.emplace(LcaEngine::from_json(prev));
      if (engine->graph().ids() != funnel.report.final_ids) engine.reset();
      else err << "resuming run with " << engine->review_log().size() << " reviews\n";
    }
  }
  if (!engine) {
    if (db) {
      fs::create_directories(*db);
      fs::remove(*db / "reviews.jsonl");
    }
    engine.emplace(funnel.report.final_ids, cfg.lca);
    engine->init_graph(ranker);
  }
  for (const auto& w : engine->warnings()) err << "warning: " << w << "\n";

  if (o.mode == "sim") {
    SimulatedHumanChannel channel(human);
    engine->run(verifier, channel);
  } else {
    DeferredChannel channel;
    RunStatus st = engine->run(verifier, channel);
    while (st == RunStatus::awaiting_review) {
      if (db) save_run(*db, *engine, cfg);
      const ReviewRequest& p = *engine->pending();
      err << p.request_id << " (attempt " << p.attempt << ")\n  " << describe(d, p.a) << "\n  " << describe(d, p.b)
          << "\n[s]ame / [d]ifferent / [i]ncomparable: " << std::flush;
      std::string line;
      if (!std::getline(in, line)) {
        err << "\nsuspended with " << engine->review_log().size() << " reviews; rerun to continue\n";
        if (o.json) out << ojson{{"status", "suspended"}, {"pending", p.request_id}}.dump(1) << "\n";
        else out << "suspended at " << p.request_id << "\n";
        return 0;
      }
      auto dec = parse_answer(line);
      if (!dec) {
        err << "please answer s, d or i\n";
        continue;
      }
      engine->answer(p.request_id, *dec);
      st = engine->run(verifier, channel);
    }
  }
  if (engine->status() == RunStatus::iteration_limit) err << "warning: iteration limit reached before convergence\n";
  if (db) {
    save_run(*db, *engine, cfg);
    ojson snap = funnel_json(funnel);
    snap["final_ids"] = funnel.report.final_ids;
    write_file(*db / "funnel.json", snap.dump(1) + "\n");
  }
  if (!o.geojson.empty()) write_geojson(o.geojson, *engine, funnel, d, err);
  ojson report = build_report(d, cfg, funnel, *engine, truth, events);
  if (!o.out.empty()) write_file(o.out, report.dump(1) + "\n");
  if (o.json) out << report.dump(1) << "\n";
  else print_report(out, report);
  return 0;
}

struct LoadedRun {
  Dataset dataset;
  RunConfig cfg;
  FunnelResult funnel;
  std::optional<LcaEngine> engine;
};

LoadedRun load_run(const Options& o, std::ostream& err) {
  if (o.db.empty()) throw UsageError("needs --db DIR holding a clustered run");
  LoadedRun r;
  r.dataset = load_dataset(o, err);
  const fs::path p = fs::path(o.db) / "run.json";
  if (!fs::exists(p)) throw UsageError("no run in " + o.db + "; run `census cluster` first");
  json snap = read_snapshot(p, "lca_run");
  if (snap.contains("run_config")) apply_config_json(r.cfg, snap["run_config"]);
  if (!o.config.empty()) r.cfg = load_config(o.config, r.cfg);
  r.funnel = run_funnel(r.dataset, r.cfg.filter, r.cfg.lca.exec);
  r.engine.emplace(LcaEngine::from_json(snap));
  return r;
}

int cmd_estimate(const Options& o, std::ostream& out, std::ostream& err) {
  LoadedRun run = load_run(o, err);
  auto events = load_events(run.dataset, o);
  if (!events) throw UsageError("estimate needs --events FILE");
  auto summary = capture_summary(run.engine->assignment(), *events);
  auto est = lincoln_petersen(summary, run.cfg.chapman ? Estimator::chapman : Estimator::lincoln_petersen);
  ojson j = estimate_json(summary, est, run.cfg.chapman);
  write_file(fs::path(o.db) / "estimate.json", j.dump(1) + "\n");
  if (o.json) {
    out << j.dump(1) << "\n";
  } else {
    out << "n1 " << summary.n1 << ", n2 " << summary.n2 << ", m " << summary.m << "\n"
        << "N = " << fixed(est.n_hat, 1) << " +/- " << fixed(est.std_error, 1) << " (95% CI " << fixed(est.ci_low, 1)
        << " to " << fixed(est.ci_high, 1) << ")\n";
  }
  return 0;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  LoadedRun run = load_run(o, err);
  std::optional<GroundTruth> truth = load_truth(run.cfg, run.dataset, o);
  auto events = load_events(run.dataset, o);
  ojson report = build_report(run.dataset, run.cfg, run.funnel, *run.engine, truth, events);
  if (!o.geojson.empty()) write_geojson(o.geojson, *run.engine, run.funnel, run.dataset, err);
  if (!o.out.empty()) write_file(o.out, report.dump(1) + "\n");
  if (o.json) out << report.dump(1) << "\n";
  else print_report(out, report);
  return 0;
}

CensusService* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.db.empty()) throw UsageError("serve needs --db DIR");
  if (o.lease_ttl < 1) throw ConfigError("lease-ttl", "must be >= 1 second");
  RunConfig cfg = load_run_config(o);
  Dataset d = load_dataset(o, err);
  auto truth = load_truth(cfg, d, o);
  if (!truth) throw ConfigError("truth_path", "the simulated oracles need ground truth (truth.csv)");
  ServiceOptions so;
  so.db = fs::path(o.db);
  so.lease_ttl = std::chrono::seconds(o.lease_ttl);
  CensusService svc(so);
  svc.register_dataset("default", std::move(d), std::move(*truth), cfg);
  const std::size_t restored = svc.restore_runs();
  g_service = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  svc.serve("0.0.0.0", o.port, [&](int port) {
    out << "listening on port " << port << " (" << restored << " runs restored)" << std::endl;
  });
  g_service = nullptr;
  svc.shutdown();
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Camera-trap census: filtering, identification and population estimates", "census"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", o.config, "key = value configuration file"); };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "seed for simulation and oracles"); };
  auto add_json = [&](CLI::App* sub) { sub->add_flag("--json", o.json, "machine-readable output"); };
  auto add_inputs = [&](CLI::App* sub) {
    sub->add_option("--manifest", o.manifest, "annotation manifest (JSON lines)");
    sub->add_option("--cameras", o.cameras, "camera registry (JSON array)");
    sub->add_option("--db", o.db, "state directory");
  };

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic study");
  add_config(simulate);
  add_seed(simulate);
  add_json(simulate);
  simulate->add_option("--out", o.out, "output directory");

  auto* ingest = app.add_subcommand("ingest", "validate a manifest and store it");
  add_inputs(ingest);
  add_json(ingest);

  auto* filter = app.add_subcommand("filter", "run the filtering funnel");
  add_inputs(filter);
  add_config(filter);
  add_json(filter);

  auto* cluster = app.add_subcommand("cluster", "identify individuals");
  add_inputs(cluster);
  add_config(cluster);
  add_seed(cluster);
  add_json(cluster);
  cluster->add_option("--mode", o.mode, "sim or interactive")->check(CLI::IsMember({"sim", "interactive"}));
  cluster->add_option("--events", o.events, "event assignment CSV");
  cluster->add_option("--out", o.out, "write the report JSON here");
  cluster->add_option("--geojson", o.geojson, "write encounter GeoJSON here");

  auto* estimate = app.add_subcommand("estimate", "Lincoln-Petersen population estimate");
  estimate->add_option("--db", o.db, "state directory");
  add_config(estimate);
  add_json(estimate);
  estimate->add_option("--events", o.events, "event assignment CSV");

  auto* report = app.add_subcommand("report", "full report for a clustered run");
  report->add_option("--db", o.db, "state directory");
  add_config(report);
  add_json(report);
  report->add_option("--events", o.events, "event assignment CSV");
  report->add_option("--out", o.out, "write the report JSON here");
  report->add_option("--geojson", o.geojson, "write encounter GeoJSON here");

  auto* serve = app.add_subcommand("serve", "HTTP API and review queue");
  serve->add_option("--db", o.db, "state directory");
  add_config(serve);
  serve->add_option("--port", o.port, "listen port (0 picks one)");
  serve->add_option("--lease-ttl", o.lease_ttl, "review lease in seconds");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
  for (auto* sub : {simulate, cluster})
    if (sub->parsed() && sub->count("--seed")) o.seed = seed;

  try {
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (ingest->parsed()) return cmd_ingest(o, out, err);
    if (filter->parsed()) return cmd_filter(o, out, err);
    if (cluster->parsed()) return cmd_cluster(o, in, out, err);
    if (estimate->parsed()) return cmd_estimate(o, out, err);
    if (report->parsed()) return cmd_report(o, out, err);
    if (serve->parsed()) return cmd_serve(o, out, err);
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const StatsError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cin, std::cout, std::cerr);
}

}  // namespace census
