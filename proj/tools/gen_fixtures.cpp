#include <cstdio>
#include <filesystem>
#include <string>

#include "gcnsa/fixtures.hpp"

// Writes the three bundled synthetic fixtures (high-, low-, and
// chance-level homophily) into the given directory.
int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "fixtures";
  std::filesystem::create_directories(dir);
  using gcnsa::FixtureKind;
  const std::pair<FixtureKind, const char*> kinds[] = {
      {FixtureKind::high_h, "high_h"},
      {FixtureKind::low_h, "low_h"},
      {FixtureKind::random_h, "random_h"},
  };
  for (auto [kind, name] : kinds) {
    gcnsa::Graph g = gcnsa::make_synthetic_graph(kind, 60, 3, 16, 1234);
    gcnsa::write_graph_json(dir + "/" + std::string(name) + ".json", g);
    std::printf("wrote %s/%s.json (n=%d, edges=%zu, h=%.3f)\n", dir.c_str(), name, g.n,
                g.edges.size(), gcnsa::dataset_homophily(g));
  }
  return 0;
}
