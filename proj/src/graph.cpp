#include "copulagraph/graph.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace copulagraph {

Edge::Edge(std::size_t a, std::size_t b) {
  if (a == b) {
    throw std::invalid_argument("edge endpoints must differ (self-loop " +
                                std::to_string(a) + ")");
  }
  i = a < b ? a : b;
  j = a < b ? b : a;
}

Graph::Graph(std::size_t p) : p_(p), adj_(p * p, 0) {
  if (p == 0) throw std::invalid_argument("graph needs at least one vertex");
}

Graph Graph::complete(std::size_t p) {
  Graph g(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) g.set_edge(Edge(i, j), true);
  return g;
}

void Graph::check_vertex(std::size_t v) const {
  if (v >= p_) {
    throw std::out_of_range("vertex " + std::to_string(v) +
                            " out of range for p=" + std::to_string(p_));
  }
}

bool Graph::has_edge(std::size_t i, std::size_t j) const {
  check_vertex(i);
  check_vertex(j);
  return adj_[index(i, j)] != 0;
}

void Graph::set_edge(const Edge& e, bool present) {
  check_vertex(e.j);
  if (e.i == e.j) throw std::invalid_argument("self-loop");
  const bool was = adj_[index(e.i, e.j)] != 0;
  if (was == present) return;
  adj_[index(e.i, e.j)] = adj_[index(e.j, e.i)] = present ? 1 : 0;
  if (present)
    ++edge_count_;
  else
    --edge_count_;
}

void Graph::toggle(const Edge& e) { set_edge(e, !has_edge(e)); }

std::vector<std::size_t> Graph::neighbors(std::size_t v) const {
  check_vertex(v);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < p_; ++k)
    if (adj_[index(v, k)]) out.push_back(k);
  return out;
}

std::size_t Graph::triangle_count(const Edge& e) const {
  check_vertex(e.j);
  std::size_t d = 0;
  const std::uint8_t* ri = &adj_[index(e.i, 0)];
  const std::uint8_t* rj = &adj_[index(e.j, 0)];
  for (std::size_t k = 0; k < p_; ++k) d += ri[k] & rj[k];
  return d;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < p_; ++i)
    for (std::size_t j = i + 1; j < p_; ++j)
      if (adj_[index(i, j)]) out.emplace_back(i, j);
  return out;
}

std::vector<Edge> Graph::non_edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < p_; ++i)
    for (std::size_t j = i + 1; j < p_; ++j)
      if (!adj_[index(i, j)]) out.emplace_back(i, j);
  return out;
}

std::string Graph::fingerprint() const {
  std::string s;
  s.reserve(max_edges());
  for (std::size_t i = 0; i < p_; ++i)
    for (std::size_t j = i + 1; j < p_; ++j) s.push_back(adj_[index(i, j)] ? '1' : '0');
  return s;
}

Graph Graph::from_fingerprint(std::size_t p, const std::string& bits) {
  Graph g(p);
  if (bits.size() != g.max_edges())
    throw std::invalid_argument("fingerprint length does not match p");
  std::size_t k = 0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j, ++k) {
      if (bits[k] == '1')
        g.set_edge(Edge(i, j), true);
      else if (bits[k] != '0')
        throw std::invalid_argument("fingerprint must be a 0/1 string");
    }
  return g;
}

Graph toggle_edge(Graph g, const Edge& e) {
  g.toggle(e);
  return g;
}

void write_edge_list(std::ostream& os, const Graph& g) {
  for (const Edge& e : g.edges()) os << e.i << ' ' << e.j << '\n';
}

Graph read_edge_list(std::istream& is, std::size_t p) {
  Graph g(p);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::size_t i = 0, j = 0;
    if (!(ls >> i >> j))
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": expected `i j`");
    g.set_edge(Edge(i, j), true);
  }
  return g;
}

void write_dot(std::ostream& os, const Graph& g, const std::vector<std::string>& vertex_names,
               const std::vector<std::string>& labels) {
  const auto es = g.edges();
  if (!labels.empty() && labels.size() != es.size())
    throw std::invalid_argument("one DOT label per edge required");
  os << "graph G {\n";
  for (std::size_t v = 0; v < g.size(); ++v) {
    os << "  " << v;
    if (v < vertex_names.size()) os << " [label=\"" << vertex_names[v] << "\"]";
    os << ";\n";
  }
  for (std::size_t k = 0; k < es.size(); ++k) {
    os << "  " << es[k].i << " -- " << es[k].j;
    if (!labels.empty()) os << " [label=\"" << labels[k] << "\"]";
    os << ";\n";
  }
  os << "}\n";
}

}  // namespace copulagraph
