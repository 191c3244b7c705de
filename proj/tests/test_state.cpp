#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "census/sim.hpp"
#include "census/state.hpp"

using namespace census;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("census_state_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct World {
  SimOutput sim;
  std::vector<std::string> ids;
  SimOracleModel model;
  SimRanker ranker{model};
  SimVerifier verifier{model};
  SimHuman human{model};
  SimulatedHumanChannel channel{human};

  explicit World(std::uint64_t seed, SimOracleParams p = {}) : sim(make(seed)), model(sim.truth, with_seed(p, seed)) {
    auto f = run_funnel(sim.dataset, FilterConfig{});
    ids = f.report.final_ids;
  }
  static SimOutput make(std::uint64_t seed) {
    SimConfig c;
    c.seed = seed;
    return generate(c);
  }
  static SimOracleParams with_seed(SimOracleParams p, std::uint64_t seed) {
    p.seed = seed;
    p.verifier_flip_rate = 0.05;
    return p;
  }
};

void truncate_file(const fs::path& p) {
  auto text = read_file(p);
  write_file(p, text.substr(0, text.size() / 2));
}

}  // namespace

TEST_CASE("dataset snapshot round trip") {
  TempDir dir("dataset");
  SimConfig c;
  c.seed = 2;
  auto sim = generate(c);
  sim.dataset.provenance = {"m.jsonl", "c.json", "abc"};
  save_dataset_state(sim.dataset, dir.path / "dataset.json");
  auto back = load_dataset_state(dir.path / "dataset.json");
  CHECK(back.same_content(sim.dataset));
  CHECK(back.provenance == sim.dataset.provenance);
  CHECK_FALSE(fs::exists(dir.path / "dataset.json.tmp"));

  Dataset empty;
  save_dataset_state(empty, dir.path / "empty.json");
  CHECK(load_dataset_state(dir.path / "empty.json").annotations.empty());
}

TEST_CASE("bad snapshots raise StateError") {
  TempDir dir("bad");
  SimConfig c;
  c.seed = 2;
  auto sim = generate(c);
  auto p = dir.path / "dataset.json";
  save_dataset_state(sim.dataset, p);
  truncate_file(p);
  CHECK_THROWS_AS(load_dataset_state(p), StateError);

  write_file(p, "{\"format_version\": 99, \"kind\": \"dataset\", \"dataset\": {}}");
  CHECK_THROWS_AS(load_dataset_state(p), StateError);
  write_file(p, "{\"kind\": \"dataset\"}");
  CHECK_THROWS_AS(load_dataset_state(p), StateError);
  write_file(p, "{\"format_version\": 1, \"kind\": \"dataset\", \"dataset\": {\"annotations\": 5}}");
  CHECK_THROWS_AS(load_dataset_state(p), StateError);
  CHECK_THROWS_AS(load_dataset_state(dir.path / "missing.json"), StateError);

  World w(3);
  LcaEngine eng(w.ids, LcaConfig{});
  eng.init_graph(w.ranker);
  eng.run(w.verifier, w.channel, 10);
  auto r = dir.path / "run.json";
  save_run_state(eng, r);
  CHECK_THROWS_AS(load_dataset_state(r), StateError);  // wrong kind
  truncate_file(r);
  CHECK_THROWS_AS(load_run_state(r), StateError);

  save_run_state(eng, r);
  auto j = nlohmann::json::parse(read_file(r));
  j["review_log"][0]["contribution"] = 12345;
  write_file(r, j.dump());
  CHECK_THROWS_AS(load_run_state(r), StateError);

  save_run_state(eng, r);
  j = nlohmann::json::parse(read_file(r));
  j["clusters"].erase(0);
  write_file(r, j.dump());
  CHECK_THROWS_AS(load_run_state(r), StateError);
}

TEST_CASE("run snapshot round trip") {
  TempDir dir("run");
  World w(4);
  LcaEngine fresh(w.ids, LcaConfig{});
  save_run_state(fresh, dir.path / "created.json");
  auto created = load_run_state(dir.path / "created.json");
  CHECK(created.phase() == RunPhase::created);
  CHECK(created.graph().ids() == fresh.graph().ids());

  LcaEngine empty({}, LcaConfig{});
  empty.init_graph(w.ranker);
  empty.run(w.verifier, w.channel);
  save_run_state(empty, dir.path / "empty.json");
  auto e2 = load_run_state(dir.path / "empty.json");
  CHECK(e2.result().cluster_count == 0);
  CHECK(e2.status() == RunStatus::converged);

  LcaEngine eng(w.ids, LcaConfig{});
  eng.init_graph(w.ranker);
  eng.run(w.verifier, w.channel);
  save_run_state(eng, dir.path / "done.json");
  auto back = load_run_state(dir.path / "done.json");
  CHECK(back.review_log() == eng.review_log());
  CHECK(back.assignment() == eng.assignment());
  CHECK(back.phase() == RunPhase::done);
  CHECK(back.result().trace == eng.result().trace);
  CHECK(back.score() == eng.score());
  CHECK(back.graph().weights_consistent());
  CHECK(back.to_json().dump() == eng.to_json().dump());
}

TEST_CASE("resume after three reviews matches the uninterrupted run") {
  TempDir dir("resume");
  World w(5);
  LcaEngine full(w.ids, LcaConfig{});
  full.init_graph(w.ranker);
  REQUIRE(full.run(w.verifier, w.channel) == RunStatus::converged);

  for (std::size_t k : {1u, 3u, 50u}) {
    LcaEngine part(w.ids, LcaConfig{});
    part.init_graph(w.ranker);
    CHECK(part.run(w.verifier, w.channel, k) == RunStatus::stopped);
    CHECK(part.review_log().size() == k);
    save_run_state(part, dir.path / "partial.json");
    auto resumed = load_run_state(dir.path / "partial.json");
    CHECK(resumed.run(w.verifier, w.channel) == RunStatus::converged);
    CHECK(resumed.review_log() == full.review_log());
    CHECK(resumed.assignment() == full.assignment());
  }
}

TEST_CASE("parked request survives a restart") {
  TempDir dir("parked");
  World w(6);
  LcaEngine eng(w.ids, LcaConfig{});
  eng.init_graph(w.ranker);
  DeferredChannel deferred;
  REQUIRE(eng.run(w.verifier, deferred) == RunStatus::awaiting_review);
  save_run_state(eng, dir.path / "run.json");
  auto back = load_run_state(dir.path / "run.json");
  REQUIRE(back.pending());
  CHECK(*back.pending() == *eng.pending());
  CHECK(back.status() == RunStatus::awaiting_review);
  back.answer(back.pending()->request_id, Decision::same);
  CHECK_FALSE(back.pending());
}

TEST_CASE("review log file mirrors the engine log") {
  TempDir dir("log");
  World w(7);
  LcaEngine eng(w.ids, LcaConfig{});
  eng.init_graph(w.ranker);
  auto path = dir.path / "sub" / "reviews.jsonl";
  ReviewLogFile file(path);
  eng.run(w.verifier, w.channel, 5);
  file.sync(eng.review_log());
  CHECK(file.lines() == 5);
  file.sync(eng.review_log());
  CHECK(file.lines() == 5);
  eng.run(w.verifier, w.channel);
  file.sync(eng.review_log());
  CHECK(ReviewLogFile::read(path) == eng.review_log());

  ReviewLogFile reopened(path);
  CHECK(reopened.lines() == eng.review_log().size());
  std::vector<ReviewDecision> shorter(eng.review_log().begin(), eng.review_log().begin() + 2);
  CHECK_THROWS_AS(reopened.sync(shorter), StateError);

  std::ofstream(path, std::ios::app) << "{not json\n";
  CHECK_THROWS_AS(ReviewLogFile::read(path), StateError);
}
