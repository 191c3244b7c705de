#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "census/cli.hpp"
#include "census/ingest.hpp"
#include "census/json_io.hpp"

using namespace census;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = cli_main(args, in, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("census_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& p) const { return (path / p).string(); }
};

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"filter", "--no-such-flag"}).code == 1);
  CHECK(run({"cluster", "--mode", "batch"}).code == 1);
  CHECK(run({"simulate"}).code == 1);
  CHECK(run({"filter"}).code == 1);
  CHECK(run({"ingest", "--manifest", "/nonexistent/a.jsonl", "--cameras", "/nonexistent/c.json", "--db", "/tmp/x"}).code == 1);
}

TEST_CASE("invalid configuration exits 1 and names the field") {
  TempDir dir("badcfg");
  write_file(dir / "bad.conf", "ca_threshold = 1.5\n");
  auto r = run({"cluster", "--config", dir / "bad.conf"});
  CHECK(r.code == 1);
  CHECK(r.err.find("ca_threshold") != std::string::npos);
  write_file(dir / "unknown.conf", "colour = blue\n");
  CHECK(run({"simulate", "--out", dir / "o", "--config", dir / "unknown.conf"}).code == 1);
}

TEST_CASE("filter on an empty dataset reports zeros") {
  TempDir dir("empty");
  write_file(dir / "a.jsonl", "");
  write_file(dir / "c.json", "[]");
  auto r = run({"filter", "--manifest", dir / "a.jsonl", "--cameras", dir / "c.json", "--json"});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["stages"].size() == 5);
  for (const auto& s : j["stages"]) {
    CHECK(s["in"] == 0);
    CHECK(s["out"] == 0);
  }
  CHECK(j["final"] == 0);
  auto table = run({"filter", "--manifest", dir / "a.jsonl", "--cameras", dir / "c.json"});
  CHECK(table.code == 0);
  CHECK(table.out.find("stage") != std::string::npos);
}

TEST_CASE("simulated clustering is reproducible") {
  auto a = run({"cluster", "--mode", "sim", "--seed", "7", "--json"});
  auto b = run({"cluster", "--mode", "sim", "--seed", "7", "--json"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  auto ja = json::parse(a.out), jb = json::parse(b.out);
  CHECK(ja["digest"] == jb["digest"]);
  CHECK(ja["result_digest"] == jb["result_digest"]);
  auto c = run({"cluster", "--mode", "sim", "--seed", "8", "--json"});
  CHECK(json::parse(c.out)["result_digest"] != ja["result_digest"]);
}

TEST_CASE("full pipeline from simulate to report") {
  TempDir dir("pipeline");
  auto sim = run({"simulate", "--out", dir / "sim", "--seed", "7", "--json"});
  REQUIRE(sim.code == 0);
  CHECK(fs::exists(dir.path / "sim" / "truth.csv"));
  CHECK(fs::exists(dir.path / "sim" / "events.csv"));
  auto ing = run({"ingest", "--manifest", dir / "sim/annotations.jsonl", "--cameras", dir / "sim/cameras.json", "--db",
                  dir / "db", "--json"});
  REQUIRE(ing.code == 0);
  CHECK(json::parse(ing.out)["accepted"] == json::parse(sim.out)["annotations"]);
  REQUIRE(run({"filter", "--db", dir / "db"}).code == 0);
  CHECK(fs::exists(dir.path / "db" / "funnel.json"));

  auto cl = run({"cluster", "--db", dir / "db", "--mode", "sim", "--seed", "7", "--json", "--geojson",
                 dir / "geo.json"});
  REQUIRE(cl.code == 0);
  auto rep = json::parse(cl.out);
  CHECK(rep["run"]["status"] == "converged");
  CHECK(rep["run"]["clusters"] == rep["evaluation"]["seen_individuals"]);
  CHECK(rep["evaluation"]["f1"].get<double>() > 0.9);
  CHECK(rep["estimate"].contains("n_hat"));
  std::size_t new_total = 0;
  for (const auto& s : rep["strategies"]) new_total += s["new_total"].get<std::size_t>();
  CHECK(new_total == rep["run"]["clusters"].get<std::size_t>());
  auto geo = json::parse(read_file(dir.path / "geo.json"));
  CHECK(geo["type"] == "FeatureCollection");

  auto est = run({"estimate", "--db", dir / "db", "--json"});
  REQUIRE(est.code == 0);
  CHECK(json::parse(est.out)["n_hat"] == rep["estimate"]["n_hat"]);
  CHECK(fs::exists(dir.path / "db" / "estimate.json"));

  auto again = run({"report", "--db", dir / "db", "--json", "--out", dir / "report.json"});
  REQUIRE(again.code == 0);
  CHECK(json::parse(again.out)["digest"] == rep["digest"]);
  CHECK(json::parse(read_file(dir.path / "report.json"))["digest"] == rep["digest"]);
  CHECK(run({"report", "--db", dir / "db"}).code == 0);
}

TEST_CASE("estimate and report need a clustered run") {
  TempDir dir("norun");
  CHECK(run({"estimate", "--db", dir / "db"}).code == 1);
  CHECK(run({"report", "--db", dir / "db"}).code == 1);
}

TEST_CASE("interactive session suspends at end of input and resumes") {
  TempDir dir("interactive");
  REQUIRE(run({"simulate", "--out", dir / "sim", "--seed", "3"}).code == 0);
  REQUIRE(run({"ingest", "--manifest", dir / "sim/annotations.jsonl", "--cameras", dir / "sim/cameras.json", "--db",
               dir / "db"}).code == 0);
  auto first = run({"cluster", "--db", dir / "db", "--mode", "interactive", "--seed", "3"}, "s\nbogus\nd\n");
  REQUIRE(first.code == 0);
  CHECK(first.out.find("suspended") != std::string::npos);
  CHECK(first.err.find("please answer") != std::string::npos);
  auto snap = json::parse(read_file(dir.path / "db" / "run.json"));
  const auto reviews = snap["review_log"].size();
  CHECK(snap["phase"] == "stability");

  std::string answers;
  for (int i = 0; i < 2000; ++i) answers += "d\n";
  auto second = run({"cluster", "--db", dir / "db", "--mode", "interactive", "--seed", "3", "--json"}, answers);
  REQUIRE(second.code == 0);
  CHECK(second.err.find("resuming run with " + std::to_string(reviews) + " reviews") != std::string::npos);
  auto rep = json::parse(second.out);
  CHECK(rep["run"]["status"] == "converged");
  auto done = json::parse(read_file(dir.path / "db" / "run.json"));
  REQUIRE(done["review_log"].size() >= reviews);
  for (std::size_t i = 0; i < reviews; ++i) CHECK(done["review_log"][i] == snap["review_log"][i]);
}
