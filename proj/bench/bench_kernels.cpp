// Serial reference vs OpenMP path for each kernel. Arg(0) is serial, Arg(1) parallel.
#include <benchmark/benchmark.h>

#include "census/kernels.hpp"
#include "census/lca.hpp"
#include "census/sim.hpp"

using namespace census;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

const SimOutput& study() {
  static const SimOutput out = [] {
    SimConfig cfg;
    cfg.individuals = 80;
    cfg.cameras = 24;
    cfg.study_days = 120;
    cfg.base_rate = 0.05;
    cfg.seed = 11;
    return generate(cfg);
  }();
  return out;
}

struct Fixture {
  std::vector<std::string> ids;
  SimOracleModel model;
  Fixture() : model(study().truth, SimOracleParams{}) {
    for (const auto& [id, _] : study().truth) {
      ids.push_back(id);
      if (ids.size() == 400) break;
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_RankAll(benchmark::State& st) {
  const auto& f = fixture();
  SimRanker ranker(f.model);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::rank_all(ranker, f.ids, 5, exec_of(st)));
}
BENCHMARK(BM_RankAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EvaluateLocal(benchmark::State& st) {
  const auto& f = fixture();
  SimRanker ranker(f.model);
  SimVerifier verifier(f.model);
  LcaConfig cfg;
  cfg.exec = Exec::serial;
  auto g = init_graph(f.ids, ranker, cfg);
  weight_edges(g, verifier, cfg);
  auto c = Clustering::singletons(g.vertex_count());
  scoring_phase(g, c, cfg);
  auto locals = local_clusterings(g, c);
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::evaluate_local(g, c, locals, cfg.alternatives(), exec_of(st)));
}
BENCHMARK(BM_EvaluateLocal)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ChainEncounters(benchmark::State& st) {
  const auto& annots = study().dataset.annotations;
  for (auto _ : st) benchmark::DoNotOptimize(kernels::chain_encounters(annots, exec_of(st)));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * annots.size()));
}
BENCHMARK(BM_ChainEncounters)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
