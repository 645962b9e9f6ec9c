#include "gcnsa/graph.hpp"

#include <algorithm>
#include <cmath>

#include "gcnsa/errors.hpp"

namespace gcnsa {

void Graph::validate() const {
  if (n <= 0) throw data_error("graph: empty node set");
  if (x.rows() != n) throw data_error("graph: feature rows != node count");
  if (int(labels.size()) != n) throw data_error("graph: every node needs a label");
  for (int i = 0; i < n; ++i)
    if (labels[i] < 0 || labels[i] >= c)
      throw data_error("graph: label out of range at node " + std::to_string(i));
  if (!x.all_finite()) throw data_error("graph: feature matrix contains NaN/Inf");
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw data_error("graph: dangling edge endpoint (" + std::to_string(i) + "," +
                       std::to_string(j) + ")");
    if (i >= j) throw data_error("graph: edge list must be stored as i < j");
  }
}

double dataset_homophily(const Graph& g) {
  long long total = static_cast<long long>(g.edges.size()) + g.self_loops;
  if (total == 0) throw data_error("dataset_homophily: empty edge set");
  long long same = g.self_loops;
  for (auto [i, j] : g.edges)
    if (g.labels[i] == g.labels[j]) ++same;
  return double(same) / double(total);
}

SplitMasks make_splits(const Graph& g, const std::array<double, 3>& ratios, Rng& rng) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::fabs(sum - 1.0) > 1e-9)
    throw config_error("make_splits: ratios must sum to 1, got " + std::to_string(sum));
  std::vector<std::vector<int>> by_class(g.c);
  for (int i = 0; i < g.n; ++i) by_class[g.labels[i]].push_back(i);
  // Classes smaller than the split count are legal (the WebKB graphs have a
  // one-node class); largest-remainder puts such nodes where the largest
  // ratio points.

  SplitMasks masks;
  for (int cls = 0; cls < g.c; ++cls) {
    std::vector<int>& nodes = by_class[cls];
    // Fisher-Yates with the run RNG
    for (size_t i = nodes.size(); i > 1; --i) {
      size_t j = size_t(rng.next_below(i));
      std::swap(nodes[i - 1], nodes[j]);
    }
    // largest-remainder quotas: exactly exhaustive, deterministic
    const int k = int(nodes.size());
    int counts[3];
    double frac[3];
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
      double exact = ratios[s] * k;
      counts[s] = int(std::floor(exact + 1e-9));
      frac[s] = exact - counts[s];
      assigned += counts[s];
    }
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int a, int b) { return frac[a] > frac[b]; });
    for (int rem = k - assigned, idx = 0; rem > 0; --rem, ++idx) counts[order[idx % 3]]++;
    int pos = 0;
    std::vector<int>* dst[3] = {&masks.train, &masks.val, &masks.test};
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < counts[s]; ++t) dst[s]->push_back(nodes[pos++]);
  }
  std::sort(masks.train.begin(), masks.train.end());
  std::sort(masks.val.begin(), masks.val.end());
  std::sort(masks.test.begin(), masks.test.end());
  return masks;
}

}  // namespace gcnsa
