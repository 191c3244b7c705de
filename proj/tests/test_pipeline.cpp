#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "census/pipeline.hpp"
#include "census/sim.hpp"
#include "oracles.hpp"

using namespace census;

namespace {

// 2016-01-30 local (UTC+3) at the given wall-clock time
EpochSeconds local(int h, int m, int s = 0) { return *parse_iso8601("2016-01-30T00:00:00+03:00") + h * 3600 + m * 60 + s; }

Annotation ann(std::string id, std::string cam, EpochSeconds t, double ca = 0.5, Viewpoint vp = Viewpoint::right,
               Species sp = Species::grevys) {
  Annotation a;
  a.annotation_id = std::move(id);
  a.image_id = "img-" + a.annotation_id;
  a.camera_id = std::move(cam);
  a.timestamp = t;
  a.ca_score = ca;
  a.viewpoint = vp;
  a.species = sp;
  return a;
}

std::vector<std::string> ids_of(const std::vector<Annotation>& v) {
  std::vector<std::string> out;
  for (const auto& a : v) out.push_back(a.annotation_id);
  return out;
}

Dataset sim_dataset(std::uint64_t seed, int individuals = 40) {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.individuals = individuals;
  return generate(cfg).dataset;
}

}  // namespace

TEST_CASE("viewpoint and species gate") {
  std::vector<Annotation> in{ann("a", "C", 0, 0.5, Viewpoint::right), ann("b", "C", 0, 0.5, Viewpoint::left),
                             ann("c", "C", 0, 0.5, Viewpoint::right, Species::plains)};
  FilterConfig cfg;
  CHECK(ids_of(gate_viewpoint_species(in, cfg)) == std::vector<std::string>{"a"});
  CHECK(gate_viewpoint_species({}, cfg).empty());
}

TEST_CASE("viewpoint gate count matches an independent count on simulated data") {
  auto d = sim_dataset(5, 150);
  REQUIRE(d.annotations.size() >= 1000);
  std::vector<Annotation> first(d.annotations.begin(), d.annotations.begin() + 1000);
  std::size_t planted = 0;
  for (const auto& a : first) {
    bool view = a.viewpoint == Viewpoint::right || a.viewpoint == Viewpoint::front_right ||
                a.viewpoint == Viewpoint::back_right;
    planted += view && a.species == Species::grevys;
  }
  CHECK(gate_viewpoint_species(first, FilterConfig{}).size() == planted);
}

TEST_CASE("day window is inclusive at the start and exclusive at the end") {
  FilterConfig cfg;
  std::vector<Annotation> in{ann("a", "C", local(6, 29, 59)), ann("b", "C", local(6, 30, 0)),
                             ann("c", "C", local(12, 0, 0)), ann("d", "C", local(18, 59, 59)),
                             ann("e", "C", local(19, 0, 0)), ann("f", "C", local(23, 0, 0))};
  CHECK(ids_of(gate_daytime(in, cfg)) == std::vector<std::string>{"b", "c", "d"});
}

TEST_CASE("daytime gate keeps exactly the planted day encounters") {
  SimConfig sc;
  sc.seed = 9;
  auto sim = generate(sc);
  std::size_t planted_day = 0;
  for (const auto& e : sim.encounters) planted_day += e.daytime ? e.annotation_ids.size() : 0;
  CHECK(gate_daytime(sim.dataset.annotations, FilterConfig{}).size() == planted_day);
}

TEST_CASE("encounter chaining examples") {
  std::vector<Annotation> in{ann("a1", "X", local(10, 0, 10)), ann("a2", "X", local(10, 0, 50)),
                             ann("a3", "X", local(10, 1, 30)), ann("a4", "X", local(10, 5, 0))};
  auto enc = cluster_encounters(in);
  REQUIRE(enc.size() == 2);
  std::set<std::vector<std::string>> members;
  for (const auto& e : enc) members.insert(e.member_ids);
  CHECK(members.count({"a1", "a2", "a3"}));
  CHECK(members.count({"a4"}));

  std::vector<Annotation> chain;
  for (int m = 1; m <= 4; ++m) chain.push_back(ann("c" + std::to_string(m), "X", local(10, m)));
  auto one = cluster_encounters(chain);
  REQUIRE(one.size() == 1);
  CHECK(one[0].minute_buckets.size() == 4);

  auto cross = cluster_encounters(std::vector{ann("x", "X", local(9, 0)), ann("y", "Y", local(9, 0))});
  CHECK(cross.size() == 2);

  auto e = cluster_encounters(std::vector{ann("z", "CAM", local(9, 0, 30))});
  REQUIRE(e.size() == 1);
  CHECK(e[0].encounter_id == "enc-CAM-" + std::to_string(epoch_minute(local(9, 0, 30))));
  CHECK(e[0].start == local(9, 0, 30));
}

TEST_CASE("encounters equal the union-find oracle on random data, in any order") {
  std::mt19937_64 rng(3);
  std::vector<Annotation> in;
  for (int i = 0; i < 600; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "a%04d", i);
    in.push_back(ann(id, "C" + std::to_string(rng() % 4), local(8, 0) + static_cast<EpochSeconds>(rng() % 7200),
                     static_cast<double>(rng() % 100) / 100.0));
  }
  std::vector<std::pair<std::string, long long>> items;
  for (const auto& a : in) items.emplace_back(a.camera_id, epoch_minute(a.timestamp));
  auto groups = oracle::chain_groups(items);
  std::map<int, std::vector<std::string>> expect;
  for (std::size_t i = 0; i < in.size(); ++i) expect[groups[i]].push_back(in[i].annotation_id);
  std::set<std::vector<std::string>> want;
  for (auto& [_, v] : expect) {
    std::sort(v.begin(), v.end());
    want.insert(v);
  }
  auto enc = cluster_encounters(in);
  std::set<std::vector<std::string>> got;
  for (const auto& e : enc) got.insert(e.member_ids);
  CHECK(got == want);

  std::shuffle(in.begin(), in.end(), rng);
  CHECK(cluster_encounters(in) == enc);
  CHECK(cluster_encounters(in, Exec::serial) == enc);
}

TEST_CASE("representative election") {
  auto a = ann("a1", "X", 0, 0.2), b = ann("a2", "X", 0, 0.9), c = ann("a3", "X", 0, 0.5);
  std::vector<const Annotation*> m{&a, &b, &c};
  CHECK(elect_representative(m) == "a2");
  auto t1 = ann("a010", "X", 0, 0.7), t2 = ann("a002", "X", 0, 0.7);
  std::vector<const Annotation*> tie{&t1, &t2};
  CHECK(elect_representative(tie) == "a002");
}

TEST_CASE("every planted burst is one encounter whose representative is the planted best member") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SimConfig sc;
    sc.seed = seed;
    auto sim = generate(sc);
    auto enc = cluster_encounters(sim.dataset.annotations);
    REQUIRE(enc.size() == sim.encounters.size());
    std::map<std::vector<std::string>, std::string> rep_of;
    for (const auto& e : enc) rep_of[e.member_ids] = e.representative_id;
    std::map<std::string, double> ca;
    for (const auto& a : sim.dataset.annotations) ca[a.annotation_id] = a.ca_score;
    for (const auto& p : sim.encounters) {
      auto ids = p.annotation_ids;
      std::sort(ids.begin(), ids.end());
      auto it = rep_of.find(ids);
      REQUIRE(it != rep_of.end());
      std::string best = ids[0];
      for (const auto& id : ids)
        if (ca[id] > ca[best]) best = id;
      CHECK(it->second == best);
    }
  }
}

TEST_CASE("ca gate is strict and blur is optional") {
  FilterConfig cfg;
  std::vector<Annotation> in{ann("a", "X", 0, 0.31), ann("b", "X", 0, 0.9997), ann("c", "X", 0, 0.0032),
                             ann("d", "X", 0, 0.3101)};
  std::vector<Discard> dropped;
  CHECK(ids_of(gate_ca_and_blur(in, cfg, &dropped)) == std::vector<std::string>{"b", "d"});
  CHECK(dropped.size() == 2);

  in[1].blur_score = 0.8;
  in[3].blur_score = 0.1;
  cfg.blur_threshold = 0.5;
  dropped.clear();
  CHECK(ids_of(gate_ca_and_blur(in, cfg, &dropped)) == std::vector<std::string>{"b"});
  in[1].blur_score.reset();
  dropped.clear();
  CHECK(gate_ca_and_blur(in, cfg, &dropped).empty());
  CHECK(std::any_of(dropped.begin(), dropped.end(), [](const Discard& d) { return d.reason == "missing blur score"; }));
}

TEST_CASE("ca survivors match an independent count of the planted scores") {
  auto d = sim_dataset(4);
  std::size_t planted = 0;
  for (const auto& a : d.annotations) planted += a.ca_score > 0.31;
  CHECK(gate_ca_and_blur(d.annotations, FilterConfig{}).size() == planted);
}

TEST_CASE("gates are idempotent and monotone") {
  auto d = sim_dataset(6);
  FilterConfig cfg;
  cfg.blur_threshold = 0.2;
  auto v1 = gate_viewpoint_species(d.annotations, cfg);
  CHECK(gate_viewpoint_species(v1, cfg) == v1);
  auto d1 = gate_daytime(d.annotations, cfg);
  CHECK(gate_daytime(d1, cfg) == d1);
  auto c1 = gate_ca_and_blur(d.annotations, cfg);
  CHECK(gate_ca_and_blur(c1, cfg) == c1);
  CHECK(c1.size() <= d.annotations.size());
}

TEST_CASE("all-pass input keeps equal counts at every stage") {
  Dataset d;
  d.cameras.push_back({"X", {0, 0}, Strategy::random_grid});
  for (int i = 0; i < 5; ++i) d.annotations.push_back(ann("a" + std::to_string(i), "X", local(8 + i, 0), 0.9));
  auto r = run_funnel(d, FilterConfig{});
  for (const auto& s : r.report.stages) CHECK(s.input == s.output);
  CHECK(r.report.final_ids.size() == 5);
}

TEST_CASE("disabling every stage is the identity") {
  auto d = sim_dataset(8, 10);
  FilterConfig cfg;
  cfg.enable_viewpoint_species = cfg.enable_daytime = cfg.enable_encounters = false;
  cfg.enable_representatives = cfg.enable_ca = false;
  auto r = run_funnel(d, cfg);
  auto want = ids_of(d.annotations);
  std::sort(want.begin(), want.end());
  CHECK(r.report.final_ids == want);
  CHECK(r.encounters.size() == d.annotations.size());
  for (const auto& s : r.report.stages) CHECK(s.input == s.output);
}

TEST_CASE("empty dataset yields a report of zeros") {
  auto r = run_funnel(Dataset{}, FilterConfig{});
  CHECK(r.report.stages.size() == 5);
  for (const auto& s : r.report.stages) {
    CHECK(s.input == 0);
    CHECK(s.output == 0);
  }
}

TEST_CASE("funnel counts match planted attrition") {
  SimConfig sc;
  sc.seed = 12;
  auto sim = generate(sc);
  auto r = run_funnel(sim.dataset, FilterConfig{});
  std::map<std::string, const Annotation*> by_id;
  for (const auto& a : sim.dataset.annotations) by_id[a.annotation_id] = &a;
  std::size_t view = 0, day = 0, encs = 0, final_count = 0;
  for (const auto& p : sim.encounters) {
    std::vector<const Annotation*> kept;
    for (const auto& id : p.annotation_ids) {
      const Annotation* a = by_id[id];
      bool ok = (a->viewpoint == Viewpoint::right || a->viewpoint == Viewpoint::front_right ||
                 a->viewpoint == Viewpoint::back_right) &&
                a->species == Species::grevys;
      if (!ok) continue;
      ++view;
      if (!p.daytime) continue;
      ++day;
      kept.push_back(a);
    }
    // gates can open gaps inside a burst, so re-split the survivors by minute
    std::sort(kept.begin(), kept.end(), [](auto* x, auto* y) { return x->timestamp < y->timestamp; });
    std::vector<std::vector<const Annotation*>> pieces;
    for (auto* a : kept) {
      if (pieces.empty() || epoch_minute(a->timestamp) - epoch_minute(pieces.back().back()->timestamp) > 1)
        pieces.emplace_back();
      pieces.back().push_back(a);
    }
    for (const auto& piece : pieces) {
      ++encs;
      const Annotation* best = piece[0];
      for (auto* a : piece)
        if (a->ca_score > best->ca_score || (a->ca_score == best->ca_score && a->annotation_id < best->annotation_id))
          best = a;
      final_count += best->ca_score > 0.31;
    }
  }
  REQUIRE(r.report.stages.size() == 5);
  CHECK(r.report.stages[0].output == view);
  CHECK(r.report.stages[1].output == day);
  CHECK(r.report.encounter_count == encs);
  CHECK(r.report.stages[3].output == encs);
  CHECK(r.report.stages[4].output == final_count);
  for (std::size_t i = 1; i < r.report.stages.size(); ++i)
    CHECK(r.report.stages[i].input == r.report.stages[i - 1].output);
}

TEST_CASE("filter config validation names the field") {
  FilterConfig cfg;
  cfg.ca_threshold = 1.5;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "ca_threshold");
  }
  cfg = FilterConfig{};
  cfg.day_start = cfg.day_end;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
