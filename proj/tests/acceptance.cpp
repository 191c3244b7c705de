// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#include "census/lca.hpp"
#include "census/pipeline.hpp"
#include "census/sim.hpp"
#include "census/state.hpp"
#include "census/stats.hpp"
#include "oracles.hpp"

using namespace census;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail, double seconds) {
  std::printf("%s  %-28s %s (%.2fs)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void criterion(const std::string& name, const std::function<bool(std::string&)>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  report(ok, name, detail, dt.count());
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// N individuals with 3..6 annotations each.
GroundTruth planted_population(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> per(3, 6);
  GroundTruth t;
  for (int i = 0; i < n; ++i) {
    const int k = per(rng);
    for (int j = 0; j < k; ++j) t[fmt("ann%04d_%d", i, j)] = fmt("IND%04d", i);
  }
  return t;
}

std::vector<std::string> keys(const GroundTruth& t) {
  std::vector<std::string> out;
  for (const auto& [k, _] : t) out.push_back(k);
  return out;
}

struct Oracles {
  SimOracleModel model;
  SimRanker ranker{model};
  SimVerifier verifier{model};
  SimHuman human{model};
  SimulatedHumanChannel channel{human};
  Oracles(GroundTruth t, SimOracleParams p) : model(std::move(t), p) {}
};

bool table_rates(std::string& d) {
  const std::pair<std::size_t, std::size_t> rows[] = {{22552, 420}, {18255, 352}, {13307, 120}};
  const char* expect[] = {"98.2%", "98.1%", "99.1%"};
  bool ok = true;
  for (int i = 0; i < 3; ++i) {
    auto got = format_rate(automation_rate(rows[i].first, rows[i].second));
    d += (i ? ", " : "") + got;
    ok = ok && got == expect[i];
  }
  return ok;
}

bool brute_force(std::string& d) {
  std::mt19937_64 rng(20240611);
  int total = 0, agree = 0;
  for (int t = 0; t < 240; ++t) {
    const int n = 1 + t % 8;
    std::uniform_int_distribution<int> lab(0, std::max(0, n / 2));
    std::vector<int> planted(static_cast<std::size_t>(n));
    for (auto& l : planted) l = lab(rng);
    oracle::Matrix w(static_cast<std::size_t>(n), std::vector<long long>(static_cast<std::size_t>(n), 0));
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> mag(1, 100);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back(fmt("v%02d", i));
    IdentificationGraph g(ids);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (u(rng) >= 0.7) continue;
        const int x = planted[static_cast<std::size_t>(i)] == planted[static_cast<std::size_t>(j)] ? mag(rng) : -mag(rng);
        w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = x;
        ReviewDecision r;
        r.seq = static_cast<std::uint64_t>(g.edges().size() + 1);
        r.a = g.id(i);
        r.b = g.id(j);
        r.decision = x > 0 ? Decision::same : Decision::different;
        r.confidence = (x + 100.0) / 200.0;
        r.contribution = x;
        g.add_review(g.add_edge(i, j), r);
      }
    auto c = Clustering::singletons(n);
    scoring_phase(g, c, LcaConfig{});
    ++total;
    agree += oracle::canonical(c.labels()) == oracle::best_partition(w);
  }
  d = fmt("%d/%d graphs match the exhaustive optimum", agree, total);
  return total >= 200 && agree == total;
}

bool planted_recovery(std::string& d) {
  bool ok = true;
  for (int n : {10, 40, 80}) {
    auto truth = planted_population(n, static_cast<std::uint64_t>(n));
    SimOracleParams p;
    p.seed = static_cast<std::uint64_t>(n);
    p.verifier_confidence_band = 0.0;
    p.human_error_rate = 0.0;
    p.human_incomparable_rate = 0.0;
    Oracles clean(truth, p);
    auto r0 = run_lca(keys(truth), clean.ranker, clean.verifier, clean.channel, LcaConfig{});
    auto e0 = evaluate(r0.clustering, truth);
    p.verifier_flip_rate = 0.05;
    Oracles flipped(truth, p);
    LcaEngine eng(keys(truth), LcaConfig{});
    eng.init_graph(flipped.ranker);
    eng.run(flipped.verifier, flipped.channel);
    auto r1 = eng.result();
    auto e1 = evaluate(r1.clustering, truth);
    // score of the planted partition on the final graph, to tell search
    // misses from misleading evidence
    std::map<std::string, int> label_of;
    std::vector<int> labels;
    for (const auto& id : eng.graph().ids())
      labels.push_back(label_of.emplace(truth.at(id), static_cast<int>(label_of.size())).first->second);
    const long long planted_score = clustering_score(eng.graph(), Clustering::from_labels(labels));
    const bool good = r0.converged && e0.f1 == 1.0 && r0.cluster_count == static_cast<std::size_t>(n) &&
                      r0.human_reviews == 0 && r1.converged && e1.f1 == 1.0 && r1.human_reviews > 0;
    ok = ok && good;
    d += fmt("%sN=%d: F1 %.3f/%zu clusters/%zu human; flip 5%%: F1 %.3f/%zu human, score %lld vs planted %lld",
             d.empty() ? "" : "; ", n, e0.f1, r0.cluster_count, r0.human_reviews, e1.f1, r1.human_reviews, eng.score(),
             planted_score);
  }
  return ok;
}

bool local_optimality(std::string& d) {
  int runs = 0, bad_delta = 0, bad_margin = 0, unconverged = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto truth = planted_population(20, seed * 7);
    SimOracleParams p;
    p.seed = seed;
    p.verifier_flip_rate = 0.1;
    Oracles o(truth, p);
    LcaConfig cfg;
    LcaEngine eng(keys(truth), cfg);
    eng.init_graph(o.ranker);
    ++runs;
    if (eng.run(o.verifier, o.channel) != RunStatus::converged) {
      ++unconverged;
      continue;
    }
    const auto& g = eng.graph();
    const auto& c = eng.clustering();
    for (const auto& lc : local_clusterings(g, c)) {
      auto alts = enumerate_alternatives(g, c, lc, cfg.alternatives());
      if (alts.empty()) continue;
      auto best = std::max_element(alts.begin(), alts.end(),
                                   [](const Alternative& x, const Alternative& y) { return x.delta < y.delta; });
      for (const auto& a : alts) bad_delta += a.delta > 0;
      if (-best->delta >= cfg.stability_margin) continue;
      bool exhausted = true;
      for (auto [u, v] : decisive_pairs(c, lc, *best)) exhausted = exhausted && eng.pair_exhausted(u, v);
      bad_margin += !exhausted;
    }
  }
  d = fmt("%d seeds, %d unconverged, %d positive deltas, %d non-exhausted locals below margin", runs, unconverged,
          bad_delta, bad_margin);
  return runs >= 50 && unconverged == 0 && bad_delta == 0 && bad_margin == 0;
}

bool funnel_integrity(std::string& d) {
  SimConfig sc;
  sc.seed = 99;
  sc.individuals = 300;
  sc.cameras = 30;
  sc.base_rate = 0.03;
  auto sim = generate(sc);
  const auto& annots = sim.dataset.annotations;
  auto base = run_funnel(sim.dataset, FilterConfig{});

  bool same = true;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    Dataset shuffled = sim.dataset;
    std::shuffle(shuffled.annotations.begin(), shuffled.annotations.end(), rng);
    auto f = run_funnel(shuffled, FilterConfig{}, t % 2 ? Exec::serial : Exec::parallel);
    bool counts = f.report.stages.size() == base.report.stages.size();
    for (std::size_t i = 0; counts && i < f.report.stages.size(); ++i)
      counts = f.report.stages[i].input == base.report.stages[i].input &&
               f.report.stages[i].output == base.report.stages[i].output;
    same = same && counts && f.encounters == base.encounters && f.report.final_ids == base.report.final_ids;
  }

  // chain invariant over the full manifest: encounters equal the union-find
  // closure of same-camera, at-most-one-minute-apart annotations
  auto encs = cluster_encounters(annots);
  std::vector<std::pair<std::string, long long>> items;
  for (const auto& a : annots) items.emplace_back(a.camera_id, epoch_minute(a.timestamp));
  auto groups = oracle::chain_groups(items);
  std::map<int, std::set<std::string>> by_root;
  for (std::size_t i = 0; i < annots.size(); ++i) by_root[groups[i]].insert(annots[i].annotation_id);
  std::set<std::set<std::string>> expect, got;
  for (auto& [_, s] : by_root) expect.insert(s);
  bool internal = true;
  for (const auto& e : encs) {
    got.insert(std::set<std::string>(e.member_ids.begin(), e.member_ids.end()));
    for (std::size_t i = 1; i < e.minute_buckets.size(); ++i)
      internal = internal && e.minute_buckets[i] - e.minute_buckets[i - 1] == 1;
  }
  d = fmt("%zu annotations, %zu encounters, permutations %s, chain partition %s", annots.size(), encs.size(),
          same ? "stable" : "DIFFER", expect == got && internal ? "exact" : "WRONG");
  return annots.size() >= 10000 && same && expect == got && internal;
}

bool estimator(std::string& d) {
  auto e = lincoln_petersen({200, 150, 60});
  const bool closed = std::fabs(e.n_hat - 500.0) < 1e-9 && std::fabs(e.std_error - std::sqrt(1750.0)) < 1e-9;
  std::mt19937_64 rng(350);
  std::binomial_distribution<int> cap(350, 0.5);
  int covered = 0, trials = 0;
  for (int t = 0; t < 1000; ++t) {
    // each animal caught independently in each event
    std::bernoulli_distribution coin(0.5);
    long long n1 = 0, n2 = 0, m = 0;
    for (int i = 0; i < 350; ++i) {
      bool a = coin(rng), b = coin(rng);
      n1 += a;
      n2 += b;
      m += a && b;
    }
    auto est = lincoln_petersen({n1, n2, m});
    ++trials;
    covered += est.ci_low <= 350.0 && 350.0 <= est.ci_high;
  }
  const double coverage = static_cast<double>(covered) / trials;
  d = fmt("N=%.1f SE=%.4f (sqrt 1750 = %.4f); coverage %.3f over %d trials", e.n_hat, e.std_error, std::sqrt(1750.0),
          coverage, trials);
  return closed && coverage >= 0.90;
}

bool resume_equivalence(std::string& d) {
  SimConfig sc;
  sc.seed = 11;
  auto sim = generate(sc);
  auto f = run_funnel(sim.dataset, FilterConfig{});
  SimOracleParams p;
  p.seed = 11;
  p.verifier_flip_rate = 0.05;
  Oracles o(sim.truth, p);
  LcaConfig cfg;
  LcaEngine full(f.report.final_ids, cfg);
  full.init_graph(o.ranker);
  full.run(o.verifier, o.channel);

  const auto dir = std::filesystem::temp_directory_path() / "census_acceptance_resume";
  std::filesystem::create_directories(dir);
  bool ok = full.status() == RunStatus::converged;
  for (std::size_t k : {1u, 5u, 20u}) {
    LcaEngine eng(f.report.final_ids, cfg);
    eng.init_graph(o.ranker);
    int restarts = 0;
    while (eng.run(o.verifier, o.channel, k) == RunStatus::stopped) {
      save_run_state(eng, dir / "run.json");
      eng = load_run_state(dir / "run.json");
      ++restarts;
    }
    const bool same = eng.assignment() == full.assignment() && eng.review_log() == full.review_log();
    ok = ok && same && eng.status() == RunStatus::converged;
    d += fmt("%sk=%zu: %d restarts %s", d.empty() ? "" : "; ", k, restarts, same ? "identical" : "DIFFER");
  }
  std::filesystem::remove_all(dir);
  d += fmt(" (%zu reviews)", full.review_log().size());
  return ok;
}

}  // namespace

int main() {
  criterion("automation-rates", table_rates);
  std::printf("SKIP  %-28s %s\n", "full-scale-results",
              "no field dataset at desk scale; covered by the property criteria below");
  criterion("brute-force-equivalence", brute_force);
  criterion("planted-recovery", planted_recovery);
  criterion("local-optimality", local_optimality);
  criterion("funnel-integrity", funnel_integrity);
  criterion("estimator", estimator);
  criterion("resume-equivalence", resume_equivalence);
  std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
