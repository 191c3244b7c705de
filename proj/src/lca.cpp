#include "census/lca.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "census/pipeline.hpp"

namespace census {

using nlohmann::json;

void LcaConfig::validate() const {
  if (top_k < 1) throw ConfigError("top_k", "must be >= 1");
  if (human_weight < 1) throw ConfigError("human_weight", "must be >= 1");
  if (stability_margin < 1) throw ConfigError("stability_margin", "must be >= 1");
  if (stability_margin > 2 * human_weight)
    throw ConfigError("stability_margin", "must not exceed 2 * human_weight");
  if (max_algo_reviews_per_pair < 1) throw ConfigError("max_algo_reviews_per_pair", "must be >= 1");
  if (max_human_reviews_per_pair < 1) throw ConfigError("max_human_reviews_per_pair", "must be >= 1");
  if (max_iterations < 1) throw ConfigError("max_iterations", "must be >= 1");
  if (exhaustive_split_limit < 2 || exhaustive_split_limit > 16)
    throw ConfigError("exhaustive_split_limit", "must lie in [2, 16]");
}

ojson lca_config_to_json(const LcaConfig& c) {
  ojson j;
  j["top_k"] = c.top_k;
  j["human_weight"] = c.human_weight;
  j["stability_margin"] = c.stability_margin;
  j["max_algo_reviews_per_pair"] = c.max_algo_reviews_per_pair;
  j["max_human_reviews_per_pair"] = c.max_human_reviews_per_pair;
  j["max_iterations"] = c.max_iterations;
  j["seed"] = c.seed;
  j["exhaustive_split_limit"] = c.exhaustive_split_limit;
  return j;
}

LcaConfig lca_config_from_json(const json& j) {
  LcaConfig c;
  c.top_k = j.at("top_k").get<int>();
  c.human_weight = j.at("human_weight").get<int>();
  c.stability_margin = j.at("stability_margin").get<int>();
  c.max_algo_reviews_per_pair = j.at("max_algo_reviews_per_pair").get<int>();
  c.max_human_reviews_per_pair = j.at("max_human_reviews_per_pair").get<int>();
  c.max_iterations = j.at("max_iterations").get<long long>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.exhaustive_split_limit = j.at("exhaustive_split_limit").get<int>();
  c.validate();
  return c;
}

std::string_view to_string(RunPhase p) {
  switch (p) {
    case RunPhase::created: return "created";
    case RunPhase::weighting: return "weighting";
    case RunPhase::stability: return "stability";
    case RunPhase::done: return "done";
  }
  return "created";
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::awaiting_review: return "awaiting_review";
    case RunStatus::converged: return "converged";
    case RunStatus::iteration_limit: return "iteration_limit";
    case RunStatus::stopped: return "stopped";
  }
  return "running";
}

namespace {

template <class E>
E enum_from(std::string_view s, std::initializer_list<E> values) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw StateError("unknown enum value: " + std::string(s));
}

std::string request_id_for(std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "req-%06llu", static_cast<unsigned long long>(seq));
  return buf;
}

}  // namespace

std::uint64_t LocalEvaluator::version(int id) const {
  auto it = version_.find(id);
  return it == version_.end() ? 0 : it->second;
}

std::vector<kernels::LocalEvaluation> LocalEvaluator::evaluate(const IdentificationGraph& g, const Clustering& c) {
  const auto locals = local_clusterings(g, c);
  std::map<LocalClustering, Entry> next;
  std::vector<LocalClustering> stale;
  for (const auto& lc : locals) {
    const std::uint64_t va = version(lc.first);
    const std::uint64_t vb = lc.is_pair() ? version(lc.second) : 0;
    auto it = cache_.find(lc);
    if (it != cache_.end() && it->second.first_version == va && it->second.second_version == vb)
      next.emplace(lc, std::move(it->second));
    else
      stale.push_back(lc);
  }
  auto fresh = kernels::evaluate_local(g, c, stale, cfg_, exec_);
  for (auto& ev : fresh) {
    const std::uint64_t va = version(ev.local.first);
    const std::uint64_t vb = ev.local.is_pair() ? version(ev.local.second) : 0;
    next.emplace(ev.local, Entry{va, vb, std::move(ev.best)});
  }
  cache_ = std::move(next);
  std::vector<kernels::LocalEvaluation> out;
  out.reserve(locals.size());
  for (const auto& lc : locals) out.push_back({lc, cache_.at(lc).best});
  return out;
}

IdentificationGraph init_graph(std::vector<std::string> ids, const Ranker& ranker, const LcaConfig& cfg,
                               std::vector<std::string>* warnings) {
  IdentificationGraph g(std::move(ids));
  auto batch = kernels::rank_all(ranker, g.ids(), cfg.top_k, cfg.exec);
  for (int q = 0; q < g.vertex_count(); ++q) {
    for (const auto& cand : batch.lists[static_cast<std::size_t>(q)]) {
      auto j = g.index_of(cand.annotation_id);
      if (!j || *j == q) {
        if (warnings) warnings->push_back("ranker returned invalid candidate " + cand.annotation_id + " for " + g.id(q));
        continue;
      }
      g.add_edge(q, *j);
    }
  }
  if (warnings)
    for (auto& f : batch.failures) warnings->push_back("ranker failed: " + f);
  return g;
}

namespace {

std::vector<ReviewDecision> weight_edges_limited(IdentificationGraph& g, const Verifier& verifier,
                                                 const LcaConfig& cfg, std::uint64_t next_seq,
                                                 std::optional<std::size_t> limit,
                                                 std::size_t* remaining_after) {
  std::vector<int> todo;
  for (std::size_t e = 0; e < g.edges().size(); ++e)
    if (g.edges()[e].reviews.empty()) todo.push_back(static_cast<int>(e));
  const std::size_t take = limit ? std::min(*limit, todo.size()) : todo.size();
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const Edge& e = g.edge(todo[i]);
    pairs.emplace_back(g.id(e.u), g.id(e.v));
  }
  auto results = kernels::verify_pairs(verifier, pairs, cfg.exec);
  std::vector<ReviewDecision> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    // abstentions and verifier failures both count as incomparable
    Verification v = results[i].value.value_or(Verification{Decision::incomparable, 0.5});
    ReviewDecision r;
    r.seq = next_seq;
    r.request_id = request_id_for(next_seq);
    ++next_seq;
    r.a = pairs[i].first;
    r.b = pairs[i].second;
    r.decision = v.decision;
    r.source = ReviewSource::algorithmic;
    r.confidence = v.confidence;
    r.contribution = review_contribution(v.decision, r.source, v.confidence, cfg.human_weight);
    g.add_review(todo[i], r);
    out.push_back(std::move(r));
  }
  if (remaining_after) *remaining_after = todo.size() - take;
  return out;
}

}  // namespace

std::vector<ReviewDecision> weight_edges(IdentificationGraph& g, const Verifier& verifier, const LcaConfig& cfg,
                                         std::uint64_t next_seq) {
  return weight_edges_limited(g, verifier, cfg, next_seq, std::nullopt, nullptr);
}

ScoringOutcome scoring_phase(const IdentificationGraph& g, Clustering& c, LocalEvaluator& evaluator,
                             long long max_moves) {
  ScoringOutcome out;
  for (;;) {
    auto evals = evaluator.evaluate(g, c);
    const kernels::LocalEvaluation* best = nullptr;
    for (const auto& ev : evals)
      if (ev.best && ev.best->delta > 0 && (!best || ev.best->delta > best->best->delta)) best = &ev;
    if (!best) {
      out.evaluations = std::move(evals);
      return out;
    }
    if (static_cast<long long>(out.moves) >= max_moves) {
      out.converged = false;
      out.evaluations = std::move(evals);
      return out;
    }
    evaluator.touch(best->local.first);
    if (best->local.is_pair()) evaluator.touch(best->local.second);
    for (int id : apply_alternative(c, best->local, *best->best)) evaluator.touch(id);
    ++out.moves;
  }
}

ScoringOutcome scoring_phase(const IdentificationGraph& g, Clustering& c, const LcaConfig& cfg) {
  LocalEvaluator ev(cfg.alternatives(), cfg.exec);
  return scoring_phase(g, c, ev, cfg.max_iterations);
}

LcaEngine::LcaEngine(std::vector<std::string> ids, LcaConfig cfg)
    : cfg_(cfg), graph_(std::move(ids)), evaluator_(cfg.alternatives(), cfg.exec) {
  cfg_.validate();
  clustering_ = Clustering::singletons(graph_.vertex_count());
}

void LcaEngine::init_graph(const Ranker& ranker) {
  if (phase_ != RunPhase::created) throw std::logic_error("init_graph: graph already initialised");
  graph_ = census::init_graph(graph_.ids(), ranker, cfg_, &warnings_);
  clustering_ = Clustering::singletons(graph_.vertex_count());
  evaluator_.reset();
  phase_ = RunPhase::weighting;
}

std::string LcaEngine::next_request_id() const { return request_id_for(log_.size() + 1); }

void LcaEngine::record(int u, int v, Decision d, ReviewSource s, double confidence, const std::string& request_id) {
  if (u > v) std::swap(u, v);
  const int e = graph_.add_edge(u, v);
  ReviewDecision r;
  r.seq = log_.size() + 1;
  r.request_id = request_id;
  r.a = graph_.id(u);
  r.b = graph_.id(v);
  r.decision = d;
  r.source = s;
  r.confidence = confidence;
  r.contribution = review_contribution(d, s, confidence, cfg_.human_weight);
  graph_.add_review(e, r);
  log_.push_back(std::move(r));
  evaluator_.touch(clustering_.cluster_of(u));
  evaluator_.touch(clustering_.cluster_of(v));
}

void LcaEngine::trace(std::string event, long long margin) {
  trace_.push_back({iterations_, std::move(event), score(), clustering_.cluster_count(), log_.size(), margin});
}

bool LcaEngine::pair_exhausted(int u, int v) const {
  auto [na, nh] = graph_.review_counts(u, v);
  return na >= cfg_.max_algo_reviews_per_pair && nh >= cfg_.max_human_reviews_per_pair;
}

std::vector<kernels::LocalEvaluation> LcaEngine::evaluate() { return evaluator_.evaluate(graph_, clustering_); }

namespace {

double human_confidence(Decision d) {
  return d == Decision::same ? 1.0 : d == Decision::different ? 0.0 : 0.5;
}

}  // namespace

RunStatus LcaEngine::run(const Verifier& verifier, ReviewChannel& channel, std::optional<std::size_t> stop) {
  if (phase_ == RunPhase::created) throw std::logic_error("run: init_graph has not been called");
  if (phase_ == RunPhase::done) return status_;
  if (pending_) return status_ = RunStatus::awaiting_review;
  status_ = RunStatus::running;
  std::size_t done_here = 0;
  auto budget_spent = [&] { return stop && done_here >= *stop; };

  if (phase_ == RunPhase::weighting) {
    std::size_t remaining = 0;
    std::optional<std::size_t> limit;
    if (stop) limit = *stop - done_here;
    auto reviews = weight_edges_limited(graph_, verifier, cfg_, log_.size() + 1, limit, &remaining);
    done_here += reviews.size();
    for (auto& r : reviews) log_.push_back(std::move(r));
    evaluator_.reset();
    if (remaining > 0) return status_ = RunStatus::stopped;
    phase_ = RunPhase::stability;
    trace("weighted");
    if (budget_spent()) return status_ = RunStatus::stopped;
  }

  for (;;) {
    const long long moves_left = cfg_.max_iterations - static_cast<long long>(iterations_);
    auto scored = scoring_phase(graph_, clustering_, evaluator_, moves_left);
    iterations_ += scored.moves;
    if (scored.moves) trace("scored");
    if (!scored.converged) return status_ = RunStatus::iteration_limit;

    // local clusterings below the stability margin, weakest first
    std::vector<const kernels::LocalEvaluation*> candidates;
    for (const auto& ev : scored.evaluations)
      if (ev.best && ev.margin() < cfg_.stability_margin) candidates.push_back(&ev);
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto* x, const auto* y) {
      if (x->margin() != y->margin()) return x->margin() < y->margin();
      return x->local < y->local;
    });

    std::optional<std::pair<int, int>> target;
    long long margin = 0;
    for (const auto* ev : candidates) {
      std::optional<std::pair<int, int>> pick;
      int fewest = 0;
      for (auto [u, v] : decisive_pairs(clustering_, ev->local, *ev->best)) {
        if (pair_exhausted(u, v)) continue;
        auto [na, nh] = graph_.review_counts(u, v);
        if (!pick || na + nh < fewest) {
          pick = std::pair{u, v};
          fewest = na + nh;
        }
      }
      if (pick) {
        target = pick;
        margin = ev->margin();
        break;
      }
    }
    if (!target) {
      phase_ = RunPhase::done;
      trace("converged");
      return status_ = RunStatus::converged;
    }
    if (static_cast<long long>(iterations_) >= cfg_.max_iterations) return status_ = RunStatus::iteration_limit;

    auto [u, v] = *target;
    auto [na, nh] = graph_.review_counts(u, v);
    if (na < cfg_.max_algo_reviews_per_pair) {
      auto res = kernels::verify_pairs(verifier, std::vector{std::pair{graph_.id(u), graph_.id(v)}}, Exec::serial, na + 1);
      Verification ver = res.front().value.value_or(Verification{Decision::incomparable, 0.5});
      record(u, v, ver.decision, ReviewSource::algorithmic, ver.confidence, next_request_id());
    } else {
      ReviewRequest req{next_request_id(), graph_.id(u), graph_.id(v), nh + 1, margin};
      auto ans = channel.request(req);
      if (!ans) {
        pending_ = std::move(req);
        return status_ = RunStatus::awaiting_review;
      }
      if (!is_human(ans->source)) throw std::logic_error("review channel answered with an algorithmic source");
      record(u, v, ans->decision, ans->source, human_confidence(ans->decision), req.request_id);
    }
    ++iterations_;
    ++done_here;
    trace("review", margin);
    if (budget_spent()) return status_ = RunStatus::stopped;
  }
}

void LcaEngine::answer(const std::string& request_id, Decision d, ReviewSource source) {
  if (!pending_) throw std::invalid_argument("no review request is pending");
  if (pending_->request_id != request_id) throw std::invalid_argument("request " + request_id + " is not pending");
  if (!is_human(source)) throw std::invalid_argument("answers must come from a human source");
  auto u = *graph_.index_of(pending_->a);
  auto v = *graph_.index_of(pending_->b);
  const long long margin = pending_->margin;
  record(u, v, d, source, human_confidence(d), request_id);
  pending_.reset();
  ++iterations_;
  trace("review", margin);
  status_ = RunStatus::running;
}

ClusterAssignment LcaEngine::assignment() const {
  ClusterAssignment out;
  for (int v = 0; v < graph_.vertex_count(); ++v) out.emplace(graph_.id(v), graph_.id(clustering_.cluster_of(v)));
  return out;
}

RunResult LcaEngine::result() const {
  RunResult r;
  r.clustering = assignment();
  r.cluster_count = clustering_.cluster_count();
  for (const auto& rv : log_) (is_human(rv.source) ? r.human_reviews : r.algorithmic_reviews)++;
  r.total_reviews = r.algorithmic_reviews + r.human_reviews;
  r.automation_rate =
      r.total_reviews == 0 ? 1.0 : static_cast<double>(r.algorithmic_reviews) / static_cast<double>(r.total_reviews);
  r.converged = status_ == RunStatus::converged;
  r.status = status_;
  r.trace = trace_;
  return r;
}

namespace {

ojson review_to_json(const ReviewDecision& r) {
  ojson j;
  j["seq"] = r.seq;
  j["request_id"] = r.request_id;
  j["pair"] = {r.a, r.b};
  j["decision"] = to_string(r.decision);
  j["source"] = to_string(r.source);
  j["confidence"] = r.confidence;
  j["contribution"] = r.contribution;
  return j;
}

ReviewDecision review_from_json(const json& j) {
  ReviewDecision r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.request_id = j.at("request_id").get<std::string>();
  r.a = j.at("pair").at(0).get<std::string>();
  r.b = j.at("pair").at(1).get<std::string>();
  auto d = decision_from_string(j.at("decision").get<std::string>());
  auto s = review_source_from_string(j.at("source").get<std::string>());
  if (!d || !s) throw StateError("review log entry has an unknown decision or source");
  r.decision = *d;
  r.source = *s;
  r.confidence = j.at("confidence").get<double>();
  r.contribution = j.at("contribution").get<int>();
  return r;
}

}  // namespace

ojson review_log_entry(const ReviewDecision& r) { return review_to_json(r); }
ReviewDecision review_from_log_entry(const json& j) { return review_from_json(j); }

ojson LcaEngine::to_json() const {
  ojson j;
  j["format_version"] = kStateFormatVersion;
  j["kind"] = "lca_run";
  j["config"] = lca_config_to_json(cfg_);
  j["phase"] = to_string(phase_);
  j["status"] = to_string(status_);
  j["iterations"] = iterations_;
  j["vertices"] = graph_.ids();
  ojson edges = ojson::array();
  for (const auto& e : graph_.edges()) edges.push_back({graph_.id(e.u), graph_.id(e.v)});
  j["edges"] = std::move(edges);
  ojson clusters = ojson::array();
  for (const auto& [_, members] : clustering_.clusters()) {
    ojson m = ojson::array();
    for (int v : members) m.push_back(graph_.id(v));
    clusters.push_back(std::move(m));
  }
  j["clusters"] = std::move(clusters);
  ojson log = ojson::array();
  for (const auto& r : log_) log.push_back(review_to_json(r));
  j["review_log"] = std::move(log);
  if (pending_) {
    j["pending"] = {{"request_id", pending_->request_id},
                    {"pair", {pending_->a, pending_->b}},
                    {"attempt", pending_->attempt},
                    {"margin", pending_->margin}};
  } else {
    j["pending"] = nullptr;
  }
  ojson tr = ojson::array();
  for (const auto& t : trace_)
    tr.push_back({{"iteration", t.iteration},
                  {"event", t.event},
                  {"score", t.score},
                  {"clusters", t.clusters},
                  {"reviews", t.reviews},
                  {"margin", t.margin}});
  j["trace"] = std::move(tr);
  j["warnings"] = warnings_;
  return j;
}

LcaEngine LcaEngine::from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) throw StateError("missing format_version");
    if (j.at("format_version").get<int>() != kStateFormatVersion)
      throw StateError("unsupported format_version " + j.at("format_version").dump());
    if (j.value("kind", "") != "lca_run") throw StateError("snapshot is not an lca_run state");

    LcaEngine eng(j.at("vertices").get<std::vector<std::string>>(), lca_config_from_json(j.at("config")));
    auto& g = eng.graph_;
    if (g.ids() != j.at("vertices").get<std::vector<std::string>>()) throw StateError("vertices are not sorted");
    for (const auto& e : j.at("edges")) {
      auto u = g.index_of(e.at(0).get<std::string>());
      auto v = g.index_of(e.at(1).get<std::string>());
      if (!u || !v) throw StateError("edge references an unknown vertex");
      g.add_edge(*u, *v);
    }
    for (const auto& rj : j.at("review_log")) {
      ReviewDecision r = review_from_json(rj);
      if (r.seq != eng.log_.size() + 1) throw StateError("review log sequence numbers are not contiguous");
      auto u = g.index_of(r.a);
      auto v = g.index_of(r.b);
      if (!u || !v) throw StateError("review references an unknown vertex");
      auto e = g.find_edge(*u, *v);
      if (!e) throw StateError("review references a missing edge");
      if (r.contribution != review_contribution(r.decision, r.source, r.confidence, eng.cfg_.human_weight))
        throw StateError("review contribution does not match its decision");
      g.add_review(*e, r);
      eng.log_.push_back(std::move(r));
    }

    std::vector<int> labels(static_cast<std::size_t>(g.vertex_count()), -1);
    int next_label = 0;
    for (const auto& members : j.at("clusters")) {
      for (const auto& m : members) {
        auto v = g.index_of(m.get<std::string>());
        if (!v || labels[static_cast<std::size_t>(*v)] != -1) throw StateError("clusters do not partition the vertices");
        labels[static_cast<std::size_t>(*v)] = next_label;
      }
      ++next_label;
    }
    if (std::find(labels.begin(), labels.end(), -1) != labels.end())
      throw StateError("clusters do not cover every vertex");
    eng.clustering_ = Clustering::from_labels(labels);

    eng.phase_ = enum_from<RunPhase>(j.at("phase").get<std::string>(),
                                     {RunPhase::created, RunPhase::weighting, RunPhase::stability, RunPhase::done});
    eng.status_ = enum_from<RunStatus>(j.at("status").get<std::string>(),
                                       {RunStatus::running, RunStatus::awaiting_review, RunStatus::converged,
                                        RunStatus::iteration_limit, RunStatus::stopped});
    eng.iterations_ = j.at("iterations").get<std::uint64_t>();
    if (const auto& p = j.at("pending"); !p.is_null()) {
      eng.pending_ = ReviewRequest{p.at("request_id").get<std::string>(), p.at("pair").at(0).get<std::string>(),
                                   p.at("pair").at(1).get<std::string>(), p.at("attempt").get<int>(),
                                   p.at("margin").get<long long>()};
    }
    for (const auto& t : j.at("trace"))
      eng.trace_.push_back({t.at("iteration").get<std::uint64_t>(), t.at("event").get<std::string>(),
                            t.at("score").get<long long>(), t.at("clusters").get<std::size_t>(),
                            t.at("reviews").get<std::size_t>(), t.at("margin").get<long long>()});
    eng.warnings_ = j.at("warnings").get<std::vector<std::string>>();
    return eng;
  } catch (const StateError&) {
    throw;
  } catch (const std::exception& e) {
    throw StateError(std::string("corrupt run state: ") + e.what());
  }
}

RunResult run_lca(std::vector<std::string> ids, const Ranker& ranker, const Verifier& verifier,
                  ReviewChannel& channel, const LcaConfig& cfg) {
  LcaEngine eng(std::move(ids), cfg);
  eng.init_graph(ranker);
  eng.run(verifier, channel);
  return eng.result();
}

}  // namespace census
