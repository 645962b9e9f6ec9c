#pragma once

#include <string>

#include "gcnsa/graph.hpp"

namespace gcnsa {

enum class FixtureKind { high_h, low_h, random_h };

// Deterministic synthetic node-classification graphs: class-informative
// features with edges wired mostly intra-class (high_h), mostly cross-class
// (low_h), or uniformly at random.
Graph make_synthetic_graph(FixtureKind kind, int n, int classes, int d, uint64_t seed);

// Writes a graph in the loader's JSON schema.
void write_graph_json(const std::string& path, const Graph& g);

}  // namespace gcnsa
