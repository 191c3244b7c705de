#include "census/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace census {

std::string_view to_string(ReviewSource s) {
  switch (s) {
    case ReviewSource::algorithmic: return "algorithmic";
    case ReviewSource::human: return "human";
    case ReviewSource::simulated_human: return "simulated_human";
  }
  return "algorithmic";
}

std::optional<ReviewSource> review_source_from_string(std::string_view s) {
  if (s == "algorithmic") return ReviewSource::algorithmic;
  if (s == "human") return ReviewSource::human;
  if (s == "simulated_human") return ReviewSource::simulated_human;
  return std::nullopt;
}

int review_contribution(Decision d, ReviewSource s, double confidence, int human_weight) {
  if (d == Decision::incomparable) return 0;
  if (is_human(s)) return d == Decision::same ? human_weight : -human_weight;
  return static_cast<int>(std::lround(100.0 * (2.0 * confidence - 1.0)));
}

int Edge::algorithmic_reviews() const {
  return static_cast<int>(std::count_if(reviews.begin(), reviews.end(),
                                        [](const ReviewDecision& r) { return !is_human(r.source); }));
}

int Edge::human_reviews() const {
  return static_cast<int>(reviews.size()) - algorithmic_reviews();
}

IdentificationGraph::IdentificationGraph(std::vector<std::string> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
    throw std::invalid_argument("duplicate annotation id in identification graph");
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], static_cast<int>(i));
  adj_.resize(ids_.size());
}

std::optional<int> IdentificationGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int IdentificationGraph::add_edge(int u, int v) {
  if (u == v) throw std::invalid_argument("self edge");
  if (u > v) std::swap(u, v);
  if (u < 0 || v >= vertex_count()) throw std::out_of_range("edge endpoint out of range");
  auto [it, inserted] = edge_index_.try_emplace(key(u, v), static_cast<int>(edges_.size()));
  if (inserted) {
    edges_.push_back(Edge{u, v, {}, 0});
    adj_[static_cast<std::size_t>(u)].push_back({v, it->second});
    adj_[static_cast<std::size_t>(v)].push_back({u, it->second});
  }
  return it->second;
}

std::optional<int> IdentificationGraph::find_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = edge_index_.find(key(u, v));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

void IdentificationGraph::add_review(int e, ReviewDecision r) {
  Edge& edge = edges_.at(static_cast<std::size_t>(e));
  edge.weight += r.contribution;
  edge.reviews.push_back(std::move(r));
}

int IdentificationGraph::weight(int u, int v) const {
  auto e = find_edge(u, v);
  return e ? edges_[static_cast<std::size_t>(*e)].weight : 0;
}

std::pair<int, int> IdentificationGraph::review_counts(int u, int v) const {
  auto e = find_edge(u, v);
  if (!e) return {0, 0};
  const Edge& edge = edges_[static_cast<std::size_t>(*e)];
  return {edge.algorithmic_reviews(), edge.human_reviews()};
}

bool IdentificationGraph::weights_consistent() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) {
    int sum = 0;
    for (const auto& r : e.reviews) sum += r.contribution;
    return sum == e.weight;
  });
}

Clustering Clustering::singletons(int n) {
  Clustering c;
  c.label_.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    c.label_[static_cast<std::size_t>(v)] = v;
    c.members_.emplace(v, std::vector<int>{v});
  }
  return c;
}

Clustering Clustering::from_labels(std::span<const int> labels) {
  std::map<int, std::vector<int>> groups;
  for (std::size_t v = 0; v < labels.size(); ++v) groups[labels[v]].push_back(static_cast<int>(v));
  Clustering c;
  c.label_.resize(labels.size());
  for (auto& [_, members] : groups) {
    int id = members.front();
    for (int v : members) c.label_[static_cast<std::size_t>(v)] = id;
    c.members_.emplace(id, std::move(members));
  }
  return c;
}

std::vector<int> Clustering::replace(std::span<const int> old_ids, const std::vector<std::vector<int>>& parts) {
  std::size_t removed = 0;
  for (int id : old_ids) {
    auto it = members_.find(id);
    if (it == members_.end()) throw std::invalid_argument("replace: unknown cluster");
    removed += it->second.size();
    members_.erase(it);
  }
  std::size_t added = 0;
  std::vector<int> ids;
  for (auto part : parts) {
    if (part.empty()) continue;
    std::sort(part.begin(), part.end());
    int id = part.front();
    for (int v : part) label_[static_cast<std::size_t>(v)] = id;
    added += part.size();
    ids.push_back(id);
    members_.emplace(id, std::move(part));
  }
  if (added != removed) throw std::logic_error("replace: parts do not cover the replaced clusters");
  return ids;
}

long long clustering_score(const IdentificationGraph& g, const Clustering& c) {
  long long s = 0;
  for (const auto& e : g.edges()) s += c.cluster_of(e.u) == c.cluster_of(e.v) ? e.weight : -e.weight;
  return s;
}

std::vector<LocalClustering> local_clusterings(const IdentificationGraph& g, const Clustering& c) {
  std::set<LocalClustering> out;
  for (const auto& [id, _] : c.clusters()) out.insert({id, -1});
  for (const auto& e : g.edges()) {
    int a = c.cluster_of(e.u);
    int b = c.cluster_of(e.v);
    if (a != b) out.insert({std::min(a, b), std::max(a, b)});
  }
  return {out.begin(), out.end()};
}

std::vector<int> local_vertices(const Clustering& c, const LocalClustering& lc) {
  std::vector<int> vs = c.members(lc.first);
  if (lc.is_pair()) {
    const auto& b = c.members(lc.second);
    vs.insert(vs.end(), b.begin(), b.end());
    std::sort(vs.begin(), vs.end());
  }
  return vs;
}

namespace {

Alternative make_split(std::span<const int> members, const std::vector<char>& in_first, long long delta) {
  Alternative alt;
  alt.kind = AlternativeKind::split;
  alt.delta = delta;
  std::vector<int> p, q;
  for (std::size_t i = 0; i < members.size(); ++i) (in_first[i] ? p : q).push_back(members[i]);
  if (q.front() < p.front()) std::swap(p, q);
  alt.parts = {std::move(p), std::move(q)};
  return alt;
}

/// Dense weight matrix of the edges internal to `members`.
std::vector<long long> internal_weights(const IdentificationGraph& g, const Clustering& c,
                                        std::span<const int> members, int cluster) {
  const std::size_t s = members.size();
  std::vector<long long> w(s * s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    for (const auto& nb : g.neighbors(members[i])) {
      if (c.cluster_of(nb.vertex) != cluster) continue;
      auto j = static_cast<std::size_t>(std::lower_bound(members.begin(), members.end(), nb.vertex) - members.begin());
      w[i * s + j] = g.edge(nb.edge).weight;
    }
  }
  return w;
}

void split_alternatives(const IdentificationGraph& g, const Clustering& c, int cluster, const AlternativeConfig& cfg,
                        std::vector<Alternative>& out) {
  const auto& members = c.members(cluster);
  const std::size_t s = members.size();
  if (s < 2) return;
  const auto w = internal_weights(g, c, members, cluster);

  if (static_cast<int>(s) <= cfg.exhaustive_split_limit) {
    // the last vertex always stays in the second part, so each unordered
    // split is visited once
    const std::uint32_t limit = 1u << (s - 1);
    std::vector<char> in_first(s);
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      long long cut = 0;
      for (std::size_t i = 0; i < s; ++i) in_first[i] = static_cast<char>((mask >> i) & 1u);
      for (std::size_t i = 0; i < s; ++i) {
        if (!in_first[i]) continue;
        for (std::size_t j = 0; j < s; ++j)
          if (!in_first[j]) cut += w[i * s + j];
      }
      out.push_back(make_split(members, in_first, -2 * cut));
    }
    return;
  }

  // one-vertex peel-offs
  std::vector<char> in_first(s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    long long cut = 0;
    for (std::size_t j = 0; j < s; ++j) cut += w[i * s + j];
    std::fill(in_first.begin(), in_first.end(), 0);
    in_first[i] = 1;
    out.push_back(make_split(members, in_first, -2 * cut));
  }

  // greedy bipartitions seeded from each internal edge, weakest first
  std::vector<std::tuple<long long, std::size_t, std::size_t>> seeds;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j)
      if (w[i * s + j] != 0 || g.find_edge(members[i], members[j])) seeds.emplace_back(w[i * s + j], i, j);
  std::sort(seeds.begin(), seeds.end());

  auto side_sum = [&](std::size_t x, bool first) {
    long long t = 0;
    for (std::size_t j = 0; j < s; ++j)
      if (j != x && static_cast<bool>(in_first[j]) == first) t += w[x * s + j];
    return t;
  };
  const std::size_t peeled = out.size();
  for (const auto& [_, su, sv] : seeds) {
    std::fill(in_first.begin(), in_first.end(), 0);
    in_first[su] = 1;
    for (std::size_t x = 0; x < s; ++x)
      if (x != su && x != sv && w[x * s + su] > w[x * s + sv]) in_first[x] = 1;
    std::size_t first_count = static_cast<std::size_t>(std::count(in_first.begin(), in_first.end(), 1));
    for (std::size_t guard = 0; guard < s * s; ++guard) {
      long long best_gain = 0;
      std::size_t best_x = s;
      for (std::size_t x = 0; x < s; ++x) {
        const bool first = in_first[x];
        if (first ? first_count == 1 : first_count == s - 1) continue;
        // cut falls by (weight to the other side) - (weight to own side)
        long long gain = side_sum(x, !first) - side_sum(x, first);
        if (gain > best_gain) {
          best_gain = gain;
          best_x = x;
        }
      }
      if (best_x == s) break;
      in_first[best_x] = !in_first[best_x];
      first_count += in_first[best_x] ? 1 : static_cast<std::size_t>(-1);
    }
    long long cut = 0;
    for (std::size_t i = 0; i < s; ++i)
      if (in_first[i])
        for (std::size_t j = 0; j < s; ++j)
          if (!in_first[j]) cut += w[i * s + j];
    Alternative greedy = make_split(members, in_first, -2 * cut);
    bool duplicate = std::any_of(out.begin() + static_cast<std::ptrdiff_t>(peeled - s), out.end(),
                                 [&](const Alternative& a) { return a.parts == greedy.parts; });
    if (!duplicate) out.push_back(std::move(greedy));
  }
}

void pair_alternatives(const IdentificationGraph& g, const Clustering& c, int ca, int cb,
                       std::vector<Alternative>& out) {
  const auto& a = c.members(ca);
  const auto& b = c.members(cb);
  // per vertex: weight to A and to B
  auto sums = [&](int x) {
    long long wa = 0, wb = 0;
    for (const auto& nb : g.neighbors(x)) {
      int l = c.cluster_of(nb.vertex);
      if (l == ca) wa += g.edge(nb.edge).weight;
      else if (l == cb) wb += g.edge(nb.edge).weight;
    }
    return std::pair{wa, wb};
  };

  long long between = 0;
  for (int x : a) between += sums(x).second;

  Alternative merge;
  merge.kind = AlternativeKind::merge;
  merge.delta = 2 * between;
  std::vector<int> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  merge.parts = {std::move(all)};
  out.push_back(std::move(merge));

  auto transfer = [&](int x, const std::vector<int>& from, const std::vector<int>& to, long long w_from,
                      long long w_to) {
    Alternative t;
    t.kind = AlternativeKind::transfer;
    t.delta = 2 * (w_to - w_from);
    std::vector<int> rest, grown(to);
    for (int y : from)
      if (y != x) rest.push_back(y);
    grown.insert(std::upper_bound(grown.begin(), grown.end(), x), x);
    if (grown.front() < rest.front()) std::swap(rest, grown);
    t.parts = {std::move(rest), std::move(grown)};
    out.push_back(std::move(t));
  };

  std::vector<int> order(a);
  order.insert(order.end(), b.begin(), b.end());
  std::sort(order.begin(), order.end());
  for (int x : order) {
    auto [wa, wb] = sums(x);
    if (c.cluster_of(x) == ca) {
      if (a.size() > 1) transfer(x, a, b, wa, wb);
    } else if (b.size() > 1) {
      transfer(x, b, a, wb, wa);
    }
  }
}

}  // namespace

std::vector<Alternative> enumerate_alternatives(const IdentificationGraph& g, const Clustering& c,
                                                const LocalClustering& lc, const AlternativeConfig& cfg) {
  std::vector<Alternative> out;
  if (lc.is_pair()) pair_alternatives(g, c, lc.first, lc.second, out);
  else split_alternatives(g, c, lc.first, cfg, out);
  return out;
}

std::optional<Alternative> best_alternative(const IdentificationGraph& g, const Clustering& c,
                                            const LocalClustering& lc, const AlternativeConfig& cfg) {
  auto alts = enumerate_alternatives(g, c, lc, cfg);
  if (alts.empty()) return std::nullopt;
  auto best = alts.begin();
  for (auto it = alts.begin() + 1; it != alts.end(); ++it)
    if (it->delta > best->delta) best = it;
  return std::move(*best);
}

std::vector<std::pair<int, int>> decisive_pairs(const Clustering& c, const LocalClustering& lc,
                                                const Alternative& alt) {
  std::vector<int> vs = local_vertices(c, lc);
  std::unordered_map<int, std::size_t> part_of;
  for (std::size_t p = 0; p < alt.parts.size(); ++p)
    for (int v : alt.parts[p]) part_of[v] = p;
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      bool now = c.cluster_of(vs[i]) == c.cluster_of(vs[j]);
      bool then = part_of.at(vs[i]) == part_of.at(vs[j]);
      if (now != then) out.emplace_back(vs[i], vs[j]);
    }
  return out;
}

std::vector<int> apply_alternative(Clustering& c, const LocalClustering& lc, const Alternative& alt) {
  std::vector<int> old{lc.first};
  if (lc.is_pair()) old.push_back(lc.second);
  return c.replace(old, alt.parts);
}

}  // namespace census
