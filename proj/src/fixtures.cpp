#include "gcnsa/fixtures.hpp"

#include <fstream>
#include <set>

#include "gcnsa/rng.hpp"

namespace gcnsa {

Graph make_synthetic_graph(FixtureKind kind, int n, int classes, int d, uint64_t seed) {
  Rng rng(seed);
  Graph g;
  g.n = n;
  g.c = classes;
  g.labels.resize(n);
  for (int i = 0; i < n; ++i) g.labels[i] = i % classes;

  // class-prototype features plus noise, so the classes are separable from
  // features alone regardless of the wiring
  Matrix<double> proto(classes, d);
  fill_uniform(proto, rng, 0.0, 1.0);
  for (size_t i = 0; i < proto.size(); ++i) proto.data()[i] = proto.data()[i] > 0.5 ? 1.0 : 0.0;
  g.x = Matrix<double>(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      g.x(i, k) = proto(g.labels[i], k) + rng.uniform(-0.25, 0.25);

  const int degree = 3;
  std::set<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < degree; ++t) {
      const bool intra = kind == FixtureKind::high_h    ? rng.next_double() < 0.9
                         : kind == FixtureKind::low_h   ? rng.next_double() < 0.1
                                                        : rng.next_double() < 1.0 / classes;
      int j = i;
      for (int attempt = 0; attempt < 64 && j == i; ++attempt) {
        int cand = int(rng.next_below(uint64_t(n)));
        if (cand == i) continue;
        const bool same = g.labels[cand] == g.labels[i];
        if (same == intra) j = cand;
      }
      if (j != i) pairs.insert({std::min(i, j), std::max(i, j)});
    }
  }
  g.edges.assign(pairs.begin(), pairs.end());
  g.validate();
  return g;
}

void write_graph_json(const std::string& path, const Graph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << "{\"features\": [\n";
  char buf[64];
  for (int i = 0; i < g.n; ++i) {
    out << '[';
    for (int k = 0; k < g.x.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.9g", g.x(i, k));
      out << (k ? "," : "") << buf;
    }
    out << (i + 1 < g.n ? "],\n" : "]\n");
  }
  out << "],\n\"labels\": [";
  for (int i = 0; i < g.n; ++i) out << (i ? "," : "") << g.labels[i];
  out << "],\n\"edges\": [\n";
  for (size_t e = 0; e < g.edges.size(); ++e)
    out << '[' << g.edges[e].first << ',' << g.edges[e].second << ']'
        << (e + 1 < g.edges.size() ? ",\n" : "\n");
  out << "]}\n";
}

}  // namespace gcnsa
