#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library code under test.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<long long>>;

/// Calls f(labels) for every set partition of {0..n-1}, as restricted
/// growth strings. There are Bell(n) of them.
inline void for_each_partition(int n, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int i, int max_label) {
    if (i == n) {
      f(a);
      return;
    }
    for (int l = 0; l <= max_label + 1; ++l) {
      a[static_cast<std::size_t>(i)] = l;
      rec(i + 1, std::max(max_label, l));
    }
  };
  if (n == 0) {
    f(a);
    return;
  }
  a[0] = 0;
  rec(1, 0);
}

inline long long bell(int n) {
  std::vector<std::vector<long long>> t(static_cast<std::size_t>(n + 1));
  t[0] = {1};
  for (int i = 1; i <= n; ++i) {
    t[static_cast<std::size_t>(i)].push_back(t[static_cast<std::size_t>(i - 1)].back());
    for (int j = 1; j <= i; ++j)
      t[static_cast<std::size_t>(i)].push_back(t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)] +
                                               t[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)]);
  }
  return t[static_cast<std::size_t>(n)][0];
}

/// Sum of weights inside clusters minus the sum across clusters.
inline long long score(const Matrix& w, const std::vector<int>& labels) {
  long long s = 0;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += labels[i] == labels[j] ? w[i][j] : -w[i][j];
  return s;
}

/// Relabels so that each cluster is named by its first vertex.
inline std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> first;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, _] = first.emplace(labels[i], static_cast<int>(i));
    out[i] = it->second;
  }
  return out;
}

/// Exhaustive optimum. Ties go to the partition with more clusters, then the
/// lexicographically smallest canonical labelling.
inline std::vector<int> best_partition(const Matrix& w) {
  const int n = static_cast<int>(w.size());
  std::vector<int> best;
  long long best_score = 0;
  std::size_t best_k = 0;
  for_each_partition(n, [&](const std::vector<int>& a) {
    long long s = score(w, a);
    std::size_t k = static_cast<std::size_t>(*std::max_element(a.begin(), a.end()) + 1);
    auto c = canonical(a);
    if (best.empty() || s > best_score || (s == best_score && (k > best_k || (k == best_k && c < best)))) {
      best = c;
      best_score = s;
      best_k = k;
    }
  });
  return best;
}

struct PairCounts {
  long long tp = 0;  // same in both
  long long fp = 0;  // same only in predicted
  long long fn = 0;  // same only in truth
  long long tn = 0;
};

/// O(n^2) same-cluster pair enumeration over two labellings of one id set.
inline PairCounts count_pairs(const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
  PairCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    for (std::size_t j = i + 1; j < predicted.size(); ++j) {
      bool p = predicted[i] == predicted[j];
      bool t = truth[i] == truth[j];
      if (p && t) ++c.tp;
      else if (p) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  return c;
}

/// Adjusted Rand index from raw pair counts (Hubert and Arabie form).
inline double ari_from_pairs(const PairCounts& c) {
  const double n = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
  const double pred = static_cast<double>(c.tp + c.fp);
  const double tru = static_cast<double>(c.tp + c.fn);
  const double expected = n == 0 ? 0 : pred * tru / n;
  const double max_index = (pred + tru) / 2;
  if (max_index == expected) return 1.0;
  return (static_cast<double>(c.tp) - expected) / (max_index - expected);
}

/// Union-find grouping of (camera, minute) items: two items join when they
/// share a camera and their minutes differ by at most one.
inline std::vector<int> chain_groups(const std::vector<std::pair<std::string, long long>>& items) {
  const std::size_t n = items.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (items[i].first == items[j].first && std::llabs(items[i].second - items[j].second) <= 1)
        parent[static_cast<std::size_t>(find(static_cast<int>(i)))] = find(static_cast<int>(j));
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = find(static_cast<int>(i));
  return out;
}

}  // namespace oracle
