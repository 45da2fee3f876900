#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "slearn/errors.hpp"
#include "slearn/graph.hpp"

// Edge-list text format:
//
//   dag <n>            or   cpdag <n>
//   u -> v                  directed edge
//   u -- v                  undirected edge (cpdag only)
//   # comment               anywhere; trailing comments allowed
//
// The writer emits the header, then directed edges, then undirected edges,
// each sorted by (u, v), one per line. Parsing what the writer produced and
// writing it again reproduces the text byte for byte.

namespace slearn {

inline std::string format_graph(const Dag& g) {
  std::string out = "dag " + std::to_string(g.size()) + "\n";
  for (const Edge& e : g.edges()) {
    out += std::to_string(e.from) + " -> " + std::to_string(e.to) + "\n";
  }
  return out;
}

inline std::string format_graph(const Pdag& p) {
  std::string out = "cpdag " + std::to_string(p.size()) + "\n";
  for (const Edge& e : p.directed_edges()) {
    out += std::to_string(e.from) + " -> " + std::to_string(e.to) + "\n";
  }
  for (const Edge& e : p.undirected_edges()) {
    out += std::to_string(e.from) + " -- " + std::to_string(e.to) + "\n";
  }
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline int parse_int(std::string_view s, std::size_t line) {
  int value = 0;
  s = trim(s);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": expected integer, got '" + std::string(s) + "'");
  }
  return value;
}

struct ParsedGraph {
  bool is_dag = false;
  int n = 0;
  std::vector<Edge> directed;
  std::vector<Edge> undirected;
};

inline ParsedGraph parse_graph_text(std::string_view text) {
  ParsedGraph out;
  bool have_header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (!have_header) {
      auto sp = line.find(' ');
      if (sp == std::string_view::npos) throw FormatError("line " + std::to_string(line_no) + ": missing node count");
      auto kind = line.substr(0, sp);
      if (kind == "dag") {
        out.is_dag = true;
      } else if (kind != "cpdag") {
        throw FormatError("line " + std::to_string(line_no) + ": unknown graph kind '" + std::string(kind) + "'");
      }
      out.n = parse_int(line.substr(sp + 1), line_no);
      if (out.n < 0) throw FormatError("negative node count");
      have_header = true;
      continue;
    }

    bool directed = true;
    auto op = line.find("->");
    if (op == std::string_view::npos) {
      op = line.find("--");
      directed = false;
    }
    if (op == std::string_view::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 'u -> v' or 'u -- v'");
    }
    Edge e{parse_int(line.substr(0, op), line_no), parse_int(line.substr(op + 2), line_no)};
    if (e.from < 0 || e.from >= out.n || e.to < 0 || e.to >= out.n) {
      throw FormatError("line " + std::to_string(line_no) + ": node out of range");
    }
    if (directed) {
      out.directed.push_back(e);
    } else {
      if (out.is_dag) throw FormatError("line " + std::to_string(line_no) + ": undirected edge in a dag");
      out.undirected.push_back(e);
    }
  }
  if (!have_header) throw FormatError("missing 'dag <n>' or 'cpdag <n>' header");
  return out;
}

}  // namespace detail

/// Parses a `dag` file. Throws FormatError or GraphError (cycle).
inline Dag parse_dag(std::string_view text) {
  auto parsed = detail::parse_graph_text(text);
  if (!parsed.is_dag) throw FormatError("expected a 'dag' header");
  try {
    return Dag::from_edges(parsed.n, parsed.directed);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

/// Parses either kind; a `dag` header yields a fully directed PDAG.
inline Pdag parse_pdag(std::string_view text) {
  auto parsed = detail::parse_graph_text(text);
  Pdag p(parsed.n);
  try {
    for (const Edge& e : parsed.directed) p.add_directed(e.from, e.to);
    for (const Edge& e : parsed.undirected) p.add_undirected(e.from, e.to);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return p;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("write failed: " + path);
}

}  // namespace slearn
