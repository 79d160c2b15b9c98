#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gda/graph.hpp"

namespace gda {

// Text container, line oriented, LF newlines:
//   nodes=<n> edges=<m> dim=<d> classes=<c>
//   n feature lines: d space-separated decimals
//   n label lines: integer or `-` for unlabeled
//   optional 3 mask lines (train/val/test): n characters of 0/1
//   m edge lines: u v

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

inline long parse_header_field(const std::string& header, const std::string& key) {
  auto pos = header.find(key + "=");
  if (pos == std::string::npos)
    throw std::runtime_error("graph file: missing header field " + key);
  pos += key.size() + 1;
  auto end = header.find(' ', pos);
  std::string tok = header.substr(pos, end == std::string::npos ? end : end - pos);
  try {
    return std::stol(tok);
  } catch (const std::exception&) {
    throw std::runtime_error("graph file: bad header value for " + key);
  }
}

inline std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(std::string("graph file: unexpected end of file reading ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline bool looks_like_mask(const std::string& line, int n) {
  if (static_cast<int>(line.size()) != n) return false;
  for (char c : line)
    if (c != '0' && c != '1') return false;
  return true;
}

}  // namespace detail

inline Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);

  std::string header = detail::next_line(in, "header");
  long n = detail::parse_header_field(header, "nodes");
  long m = detail::parse_header_field(header, "edges");
  long d = detail::parse_header_field(header, "dim");
  long c = detail::parse_header_field(header, "classes");
  if (n < 0 || m < 0 || d < 0 || c < 0) throw std::runtime_error("graph file: negative header value");

  Graph g;
  g.num_nodes = static_cast<int>(n);
  g.num_classes = static_cast<int>(c);
  g.features = Mat<double>(n, d);

  for (long i = 0; i < n; ++i) {
    std::istringstream fs(detail::next_line(in, "features"));
    for (long j = 0; j < d; ++j)
      if (!(fs >> g.features(i, j)))
        throw std::runtime_error("graph file: feature dimension mismatch at node " + std::to_string(i));
    double extra;
    if (fs >> extra)
      throw std::runtime_error("graph file: feature dimension mismatch at node " + std::to_string(i));
  }

  g.labels.assign(n, kUnlabeled);
  bool any_label = false;
  for (long i = 0; i < n; ++i) {
    std::string line = detail::next_line(in, "labels");
    if (line == "-") continue;
    int y;
    try {
      y = std::stoi(line);
    } catch (const std::exception&) {
      throw std::runtime_error("graph file: bad label line at node " + std::to_string(i));
    }
    if (y < 0 || y >= g.num_classes) throw std::runtime_error("label out of range");
    g.labels[i] = y;
    any_label = true;
  }
  if (!any_label) g.labels.clear();

  // The mask block is distinguishable from edge lines: a mask line is a
  // single run of n 0/1 characters, an edge line has two tokens.
  std::vector<std::string> pending;
  if (m > 0 || in.peek() != EOF) {
    std::string first;
    if (std::getline(in, first)) {
      if (!first.empty() && first.back() == '\r') first.pop_back();
      if (detail::looks_like_mask(first, g.num_nodes)) {
        auto parse_mask = [&](const std::string& line) {
          std::vector<std::uint8_t> mask(n);
          for (long i = 0; i < n; ++i) mask[i] = line[i] == '1';
          return mask;
        };
        g.train_mask = parse_mask(first);
        g.val_mask = parse_mask(detail::next_line(in, "val mask"));
        g.test_mask = parse_mask(detail::next_line(in, "test mask"));
      } else {
        pending.push_back(first);
      }
    }
  }

  std::vector<std::pair<int, int>> edges;
  edges.reserve(m);
  for (long e = 0; e < m; ++e) {
    std::string line = pending.empty() ? detail::next_line(in, "edges") : pending[0];
    pending.clear();
    std::istringstream es(line);
    int u, v;
    if (!(es >> u >> v)) throw std::runtime_error("graph file: bad edge line " + line);
    if (u < 0 || v < 0 || u >= n || v >= n) throw std::runtime_error("graph file: edge index out of range");
    edges.emplace_back(u, v);
  }

  g.adj = build_csr(g.num_nodes, edges);
  validate_graph(g);
  return g;
}

inline void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF newlines everywhere
  if (!out) throw std::runtime_error("cannot write graph file: " + path);

  out << "nodes=" << g.num_nodes << " edges=" << g.num_edges() << " dim=" << g.feature_dim()
      << " classes=" << g.num_classes << "\n";
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j = 0; j < g.feature_dim(); ++j) {
      if (j) out << ' ';
      out << detail::format_double(g.features(i, j));
    }
    out << '\n';
  }
  for (int i = 0; i < g.num_nodes; ++i) {
    if (g.has_labels() && g.labels[i] != kUnlabeled)
      out << g.labels[i] << '\n';
    else
      out << "-\n";
  }
  if (g.has_masks()) {
    for (const auto* mask : {&g.train_mask, &g.val_mask, &g.test_mask}) {
      for (int i = 0; i < g.num_nodes; ++i)
        out << (i < static_cast<int>(mask->size()) && (*mask)[i] ? '1' : '0');
      out << '\n';
    }
  }
  for (const auto& [u, v] : g.adj.undirected_edges()) out << u << ' ' << v << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gda
