#pragma once

#include <algorithm>
#include <memory>
#include <utility>
#include <vector>

#include "gcnsa/matrix.hpp"

namespace gcnsa {

// Structure-only CSR of a square matrix: row offsets + sorted column indices.
struct SparsePattern {
  int n = 0;
  std::vector<int> row_offsets;  // n + 1
  std::vector<int> col_indices;  // sorted ascending within each row

  int nnz() const { return int(col_indices.size()); }

  // Position of (i, j), or -1.
  int find(int i, int j) const {
    auto b = col_indices.begin() + row_offsets[i];
    auto e = col_indices.begin() + row_offsets[i + 1];
    auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return -1;
    return int(it - col_indices.begin());
  }

  static SparsePattern from_pairs(int n, std::vector<std::pair<int, int>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    SparsePattern p;
    p.n = n;
    p.row_offsets.assign(n + 1, 0);
    p.col_indices.reserve(pairs.size());
    for (const auto& [i, j] : pairs) p.row_offsets[i + 1]++;
    for (int i = 0; i < n; ++i) p.row_offsets[i + 1] += p.row_offsets[i];
    for (const auto& [i, j] : pairs) p.col_indices.push_back(j);
    return p;
  }
};

// Compressed-row storage for the adjacency matrices A, A-hat, A*, A*-hat.
template <typename T>
struct SparseAdjacency {
  int n = 0;
  std::vector<int> row_offsets;
  std::vector<int> col_indices;
  std::vector<T> values;

  int nnz() const { return int(col_indices.size()); }

  int find(int i, int j) const {
    auto b = col_indices.begin() + row_offsets[i];
    auto e = col_indices.begin() + row_offsets[i + 1];
    auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return -1;
    return int(it - col_indices.begin());
  }

  bool structurally_symmetric() const {
    for (int i = 0; i < n; ++i)
      for (int e = row_offsets[i]; e < row_offsets[i + 1]; ++e)
        if (find(col_indices[e], i) < 0) return false;
    return true;
  }

  bool symmetric() const {
    for (int i = 0; i < n; ++i)
      for (int e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
        int pos = find(col_indices[e], i);
        if (pos < 0 || values[pos] != values[e]) return false;
      }
    return true;
  }

  SparsePattern pattern() const { return {n, row_offsets, col_indices}; }

  static SparseAdjacency from_entries(int n, std::vector<std::pair<std::pair<int, int>, T>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseAdjacency a;
    a.n = n;
    a.row_offsets.assign(n + 1, 0);
    for (const auto& ent : entries) a.row_offsets[ent.first.first + 1]++;
    for (int i = 0; i < n; ++i) a.row_offsets[i + 1] += a.row_offsets[i];
    a.col_indices.reserve(entries.size());
    a.values.reserve(entries.size());
    for (const auto& ent : entries) {
      a.col_indices.push_back(ent.first.second);
      a.values.push_back(ent.second);
    }
    return a;
  }

  Matrix<T> dense() const {
    Matrix<T> d(n, n);
    for (int i = 0; i < n; ++i)
      for (int e = row_offsets[i]; e < row_offsets[i + 1]; ++e) d(i, col_indices[e]) = values[e];
    return d;
  }
};

// Y = A * H for a square CSR matrix and dense H.
template <typename T>
void spmm_values(const SparseAdjacency<T>& a, const Matrix<T>& h, Matrix<T>& y) {
  const int q = h.cols();
  y = Matrix<T>(a.n, q);
  for (int i = 0; i < a.n; ++i) {
    T* yr = y.row(i);
    for (int e = a.row_offsets[i]; e < a.row_offsets[i + 1]; ++e) {
      const T v = a.values[e];
      const T* hr = h.row(a.col_indices[e]);
      for (int k = 0; k < q; ++k) yr[k] += v * hr[k];
    }
  }
}

// Rectangular CSR, used for sparse node-feature matrices.
template <typename T>
struct CsrMatrix {
  int rows = 0, cols = 0;
  std::vector<int> row_offsets;
  std::vector<int> col_indices;
  std::vector<T> values;

  static CsrMatrix from_dense(const Matrix<T>& m) {
    CsrMatrix c;
    c.rows = m.rows();
    c.cols = m.cols();
    c.row_offsets.assign(m.rows() + 1, 0);
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j)
        if (m(i, j) != T(0)) {
          c.col_indices.push_back(j);
          c.values.push_back(m(i, j));
        }
      c.row_offsets[i + 1] = int(c.col_indices.size());
    }
    return c;
  }

  double density() const {
    if (rows == 0 || cols == 0) return 0.0;
    return double(values.size()) / (double(rows) * cols);
  }
};

// Symmetric degree normalization of the values on a fixed pattern:
// out(i,j) = v(i,j) / sqrt(d_i d_j) with d = row sums of v; zero-degree rows
// stay zero. The scale product uses a canonical operand order so the output
// is bit-exactly symmetric whenever the input values are.
template <typename T>
void normalize_sym_kernel(const SparsePattern& pat, const std::vector<T>& v, std::vector<T>& out,
                          std::vector<T>* scales_out = nullptr) {
  const int n = pat.n;
  std::vector<T> scale(n, T(0));
  for (int i = 0; i < n; ++i) {
    T d = T(0);
    for (int e = pat.row_offsets[i]; e < pat.row_offsets[i + 1]; ++e) d += v[e];
    if (d > T(0)) scale[i] = T(1) / std::sqrt(double(d));
  }
  out.assign(v.size(), T(0));
  for (int i = 0; i < n; ++i) {
    for (int e = pat.row_offsets[i]; e < pat.row_offsets[i + 1]; ++e) {
      const int j = pat.col_indices[e];
      out[e] = v[e] * (scale[std::min(i, j)] * scale[std::max(i, j)]);
    }
  }
  if (scales_out) *scales_out = std::move(scale);
}

}  // namespace gcnsa
