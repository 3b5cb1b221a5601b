#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace copulagraph {

/// Unordered vertex pair stored with i < j.
struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;

  Edge() = default;
  /// Canonicalizes the order; throws std::invalid_argument when i == j.
  Edge(std::size_t a, std::size_t b);

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected simple graph on p labeled vertices, dense symmetric adjacency.
class Graph {
 public:
  /// Graph with p vertices and no edges. Throws std::invalid_argument if p == 0.
  explicit Graph(std::size_t p);

  static Graph complete(std::size_t p);

  std::size_t size() const noexcept { return p_; }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::size_t max_edges() const noexcept { return p_ * (p_ - 1) / 2; }

  bool has_edge(std::size_t i, std::size_t j) const;
  bool has_edge(const Edge& e) const { return has_edge(e.i, e.j); }

  void set_edge(const Edge& e, bool present);
  /// Flips presence of e in place.
  void toggle(const Edge& e);

  /// Vertices adjacent to v, ascending.
  std::vector<std::size_t> neighbors(std::size_t v) const;

  /// Number of common neighbours of e.i and e.j, i.e. triangles e would close.
  std::size_t triangle_count(const Edge& e) const;

  /// All present edges in lexicographic (i, j) order.
  std::vector<Edge> edges() const;
  /// All absent vertex pairs in lexicographic order.
  std::vector<Edge> non_edges() const;

  /// Upper-triangle bit string, row major, one char per pair.
  std::string fingerprint() const;
  static Graph from_fingerprint(std::size_t p, const std::string& bits);

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.p_ == b.p_ && a.adj_ == b.adj_;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * p_ + j; }
  void check_vertex(std::size_t v) const;

  std::size_t p_;
  std::vector<std::uint8_t> adj_;
  std::size_t edge_count_ = 0;
};

/// Returns a copy of g with e toggled.
Graph toggle_edge(Graph g, const Edge& e);

/// One `i j` line per edge, zero based, i < j.
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is, std::size_t p);

/// Undirected DOT; `labels`, when non-empty, holds one label per edge of g.edges().
void write_dot(std::ostream& os, const Graph& g,
               const std::vector<std::string>& vertex_names = {},
               const std::vector<std::string>& labels = {});

}  // namespace copulagraph
