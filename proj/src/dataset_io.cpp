#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gcnsa/graph.hpp"
#include "nlohmann/json.hpp"

namespace gcnsa {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_file(const std::string& path) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw data_error("cannot open " + path);
    std::string out;
    char buf[1 << 16];
    int got;
    while ((got = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, size_t(got));
    bool bad = got < 0;
    gzclose(f);
    if (bad) throw data_error("gzip read error in " + path);
    return out;
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

// Shared edge-list ingestion: dedup, merge reversed duplicates, drop and
// count self-loops.
struct EdgeAccum {
  std::set<std::pair<int, int>> pairs;
  std::set<int> self_nodes;
  long long duplicates = 0;

  void add(int u, int v) {
    if (u == v) {
      self_nodes.insert(u);
      return;
    }
    auto p = std::make_pair(std::min(u, v), std::max(u, v));
    if (!pairs.insert(p).second) ++duplicates;
  }

  void finish(Graph& g) {
    g.edges.assign(pairs.begin(), pairs.end());
    g.self_loops = int(self_nodes.size());
    if (g.self_loops > 0)
      g.warnings.push_back("dropped " + std::to_string(g.self_loops) + " self-loop record(s)");
    if (duplicates > 0)
      g.warnings.push_back("merged " + std::to_string(duplicates) + " duplicate edge record(s)");
  }
};

Graph load_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw data_error(path + ": JSON parse error: " + e.what());
  }
  if (!j.contains("features") || !j.contains("labels") || !j.contains("edges"))
    throw data_error(path + ": expected keys features/labels/edges");

  Graph g;
  const auto& feats = j["features"];
  g.n = int(feats.size());
  if (g.n == 0) throw data_error(path + ": empty feature list");
  const int d = int(feats[0].size());
  g.x = Matrix<double>(g.n, d);
  for (int i = 0; i < g.n; ++i) {
    if (int(feats[i].size()) != d)
      throw data_error(path + ": feature row " + std::to_string(i) + " has length " +
                       std::to_string(feats[i].size()) + ", expected " + std::to_string(d));
    for (int k = 0; k < d; ++k) g.x(i, k) = feats[i][k].get<double>();
  }

  const auto& labels = j["labels"];
  if (int(labels.size()) != g.n) throw data_error(path + ": labels length != node count");
  std::vector<long> raw(g.n);
  std::set<long> uniq;
  for (int i = 0; i < g.n; ++i) {
    raw[i] = labels[i].get<long>();
    uniq.insert(raw[i]);
  }
  std::map<long, int> remap;  // contiguous [0, c), ordered by raw value
  for (long v : uniq) remap.emplace(v, int(remap.size()));
  g.c = int(remap.size());
  g.labels.resize(g.n);
  for (int i = 0; i < g.n; ++i) g.labels[i] = remap[raw[i]];

  EdgeAccum acc;
  for (const auto& e : j["edges"]) {
    if (e.size() != 2) throw data_error(path + ": edge entries must be [i, j]");
    int u = e[0].get<int>(), v = e[1].get<int>();
    if (u < 0 || v < 0 || u >= g.n || v >= g.n)
      throw data_error(path + ": dangling edge endpoint [" + std::to_string(u) + "," +
                       std::to_string(v) + "]");
    acc.add(u, v);
  }
  acc.finish(g);
  g.validate();
  return g;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& tok, const std::string& path, int line_no) {
  double v;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw data_error(path + ":" + std::to_string(line_no) + ": malformed numeric field '" + tok +
                     "'");
  return v;
}

// Citation-network raw style: <id> <f_1> ... <f_d> <label> per line, plus a
// companion cites file of <cited> <citing> pairs.
Graph load_content_cites(const std::string& content_path) {
  std::string cites_path = content_path;
  size_t pos = cites_path.rfind(".content");
  if (pos == std::string::npos)
    throw data_error(content_path + ": content/cites loader expects a .content file");
  cites_path.replace(pos, 8, ".cites");
  if (!file_exists(cites_path)) {
    // allow mixed compression of the pair
    std::string alt = cites_path;
    if (ends_with(alt, ".gz"))
      alt = alt.substr(0, alt.size() - 3);
    else
      alt += ".gz";
    if (!file_exists(alt)) throw data_error("cites file not found: " + cites_path);
    cites_path = alt;
  }

  std::string content = read_file(content_path);
  Graph g;
  std::map<std::string, int> id_of;
  std::vector<std::string> label_names;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_labels;
  {
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    size_t d = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto toks = split_tabs(line);
      if (toks.size() < 3)
        throw data_error(content_path + ":" + std::to_string(line_no) +
                         ": expected <id> <features...> <label>");
      if (d == 0) d = toks.size() - 2;
      if (toks.size() - 2 != d)
        throw data_error(content_path + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(d) + " features, got " + std::to_string(toks.size() - 2));
      if (!id_of.emplace(toks.front(), int(rows.size())).second)
        throw data_error(content_path + ":" + std::to_string(line_no) + ": duplicate node id '" +
                         toks.front() + "'");
      std::vector<double> feat(d);
      for (size_t k = 0; k < d; ++k) feat[k] = parse_number(toks[k + 1], content_path, line_no);
      rows.push_back(std::move(feat));
      row_labels.push_back(toks.back());
    }
  }
  g.n = int(rows.size());
  if (g.n == 0) throw data_error(content_path + ": no records");
  const int d = int(rows[0].size());
  g.x = Matrix<double>(g.n, d);
  for (int i = 0; i < g.n; ++i)
    for (int k = 0; k < d; ++k) g.x(i, k) = rows[i][k];

  std::set<std::string> uniq(row_labels.begin(), row_labels.end());
  std::map<std::string, int> remap;
  for (const auto& name : uniq) remap.emplace(name, int(remap.size()));
  g.c = int(remap.size());
  g.labels.resize(g.n);
  for (int i = 0; i < g.n; ++i) g.labels[i] = remap[row_labels[i]];

  EdgeAccum acc;
  {
    std::istringstream in(read_file(cites_path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string a, b;
      if (!(ls >> a >> b))
        throw data_error(cites_path + ":" + std::to_string(line_no) + ": expected <cited> <citing>");
      auto ia = id_of.find(a);
      auto ib = id_of.find(b);
      if (ia == id_of.end() || ib == id_of.end())
        throw data_error(cites_path + ":" + std::to_string(line_no) +
                         ": dangling edge endpoint '" + (ia == id_of.end() ? a : b) + "'");
      acc.add(ia->second, ib->second);
    }
  }
  acc.finish(g);
  g.validate();
  return g;
}

}  // namespace

Graph load_graph(const std::string& path, GraphFormat format) {
  if (format == GraphFormat::autodetect) {
    if (ends_with(path, ".json") || ends_with(path, ".json.gz"))
      format = GraphFormat::json;
    else if (ends_with(path, ".content") || ends_with(path, ".content.gz"))
      format = GraphFormat::content_cites;
    else
      throw data_error(path + ": cannot infer format from extension; pass json or content-cites");
  }
  return format == GraphFormat::json ? load_json(path) : load_content_cites(path);
}

void write_adjacency_csv(const std::string& path, const SparseAdjacency<double>& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << "src,dst,weight\n";
  char buf[64];
  for (int i = 0; i < a.n; ++i)
    for (int e = a.row_offsets[i]; e < a.row_offsets[i + 1]; ++e) {
      int len = std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", i, a.col_indices[e],
                              a.values[e]);
      out.write(buf, len);
    }
}

SparseAdjacency<double> read_adjacency_csv(const std::string& path, int n) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("src,dst,weight", 0) != 0)
    throw data_error(path + ": expected 'src,dst,weight' header");
  std::vector<std::pair<std::pair<int, int>, double>> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int i, j;
    double w;
    if (std::sscanf(line.c_str(), "%d,%d,%lg", &i, &j, &w) != 3)
      throw data_error(path + ":" + std::to_string(line_no) + ": malformed edge row");
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw data_error(path + ":" + std::to_string(line_no) + ": endpoint out of range");
    entries.push_back({{i, j}, w});
  }
  return SparseAdjacency<double>::from_entries(n, std::move(entries));
}

}  // namespace gcnsa
