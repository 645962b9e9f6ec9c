#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "gcnsa/rng.hpp"
#include "gcnsa/sparse.hpp"

namespace gcnsa {

// Undirected node-classification graph. The stored edge list is simple:
// deduplicated, i < j, no self-loops. Self-loop records seen at load time
// are counted separately; the WebKB raw files carry self-citation rows and
// the reported homophily of the distributed graphs counts them.
struct Graph {
  int n = 0;
  int c = 0;
  Matrix<double> x;                       // n x d features
  std::vector<std::pair<int, int>> edges;  // unique, i < j, sorted
  std::vector<int> labels;                 // in [0, c)
  int self_loops = 0;                      // unique self-loop records dropped at load
  std::vector<std::string> warnings;

  int d() const { return x.cols(); }
  void validate() const;
};

// Binary adjacency of the stored (simple) edge list.
template <typename T>
SparseAdjacency<T> adjacency(const Graph& g) {
  std::vector<std::pair<std::pair<int, int>, T>> entries;
  entries.reserve(g.edges.size() * 2);
  for (auto [i, j] : g.edges) {
    entries.push_back({{i, j}, T(1)});
    entries.push_back({{j, i}, T(1)});
  }
  return SparseAdjacency<T>::from_entries(g.n, std::move(entries));
}

// A-hat = D~^{-1/2} (A + I) D~^{-1/2}; the self-loop guarantees positive
// degrees, so an isolated node maps to the 1x1 identity.
template <typename T>
SparseAdjacency<T> normalize_with_self_loops(const SparseAdjacency<T>& a) {
  std::vector<std::pair<std::pair<int, int>, T>> entries;
  entries.reserve(a.col_indices.size() + a.n);
  for (int i = 0; i < a.n; ++i) {
    entries.push_back({{i, i}, T(1)});
    for (int e = a.row_offsets[i]; e < a.row_offsets[i + 1]; ++e)
      entries.push_back({{i, a.col_indices[e]}, a.values[e]});
  }
  SparseAdjacency<T> b = SparseAdjacency<T>::from_entries(a.n, std::move(entries));
  std::vector<T> scale(b.n);
  for (int i = 0; i < b.n; ++i) {
    T d = T(0);
    for (int e = b.row_offsets[i]; e < b.row_offsets[i + 1]; ++e) d += b.values[e];
    scale[i] = T(1) / std::sqrt(double(d));
  }
  // upper triangle once, mirrored, so symmetry is bit-exact
  for (int i = 0; i < b.n; ++i) {
    for (int e = b.row_offsets[i]; e < b.row_offsets[i + 1]; ++e) {
      int j = b.col_indices[e];
      if (j < i) continue;
      T w = b.values[e] * scale[i] * scale[j];
      b.values[e] = w;
      if (j != i) b.values[b.find(j, i)] = w;
    }
  }
  return b;
}

// A*-hat = D*^{-1/2} A* D*^{-1/2} without any self-loop term; zero-degree
// rows stay all-zero rather than erroring (a clamped A* row can vanish).
template <typename T>
SparseAdjacency<T> normalize_no_self_loops(const SparseAdjacency<T>& a) {
  for (T v : a.values)
    if (v < T(0)) throw data_error("normalize_no_self_loops: negative value in input");
  SparseAdjacency<T> b = a;
  SparsePattern pat = a.pattern();
  normalize_sym_kernel(pat, a.values, b.values);
  return b;
}

// Disjoint per-run node splits covering all of V.
struct SplitMasks {
  std::vector<int> train, val, test;  // ascending node indices
};

SplitMasks make_splits(const Graph& g, const std::array<double, 3>& ratios, Rng& rng);

// Structural homophily: fraction of off-diagonal stored entries joining
// equal labels. Presence only; weights ignored.
template <typename T>
double homophily_ratio(const std::vector<int>& labels, const SparseAdjacency<T>& adj) {
  if (!adj.structurally_symmetric())
    throw data_error("homophily_ratio: adjacency is not structurally symmetric");
  long long total = 0, same = 0;
  for (int i = 0; i < adj.n; ++i) {
    for (int e = adj.row_offsets[i]; e < adj.row_offsets[i + 1]; ++e) {
      int j = adj.col_indices[e];
      if (j == i || adj.values[e] == T(0)) continue;
      ++total;
      if (labels[i] == labels[j]) ++same;
    }
  }
  if (total == 0) throw data_error("homophily_ratio: empty edge set");
  return double(same) / double(total);
}

// Homophily of the dataset as distributed: stored simple edges plus the
// self-loop records dropped at load (each trivially intra-class). This is
// the convention behind the published per-dataset h values.
double dataset_homophily(const Graph& g);

enum class GraphFormat { autodetect, json, content_cites };

// Loaders (json / content-cites, gzip accepted by extension) live in
// dataset_io.cpp.
Graph load_graph(const std::string& path, GraphFormat format = GraphFormat::autodetect);

// Edge-list CSV (src,dst,weight) export/import for learned adjacencies.
void write_adjacency_csv(const std::string& path, const SparseAdjacency<double>& a);
SparseAdjacency<double> read_adjacency_csv(const std::string& path, int n);

}  // namespace gcnsa
