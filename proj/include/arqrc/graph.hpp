#pragma once

// Directed communication topologies and the out-degree based weight rule.
//
// Node ids are 0-based in memory and 1-based in every text format.  An edge
// (src, dst) means "src transmits to dst"; the implicit self-loop of every
// node is never stored.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace arqrc {

using node_id = std::size_t;

struct edge {
  node_id src;
  node_id dst;

  friend bool operator==(const edge&, const edge&) = default;
  friend auto operator<=>(const edge&, const edge&) = default;
};

class parse_error : public std::runtime_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class digraph {
 public:
  digraph() = default;

  /// Throws std::invalid_argument on self-loops, duplicates or ids >= n.
  digraph(std::size_t n, std::vector<edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n_ == 0) throw std::invalid_argument("digraph needs at least one node");
    for (const auto& e : edges_) {
      if (e.src >= n_ || e.dst >= n_) throw std::invalid_argument("edge endpoint out of range");
      if (e.src == e.dst) throw std::invalid_argument("explicit self-loop");
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw std::invalid_argument("duplicate edge");
    out_.assign(n_, {});
    in_.assign(n_, {});
    out_edge_.assign(n_, {});
    in_edge_.assign(n_, {});
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      out_[e.src].push_back(e.dst);
      out_edge_[e.src].push_back(k);
      in_[e.dst].push_back(e.src);
      in_edge_[e.dst].push_back(k);
    }
    // in-lists come out ordered by src because edges_ is sorted by (src, dst)
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Edges sorted by (src, dst); positions are the link indices used everywhere else.
  const std::vector<edge>& edges() const noexcept { return edges_; }
  const edge& link(std::size_t k) const { return edges_.at(k); }

  const std::vector<node_id>& out_neighbors(node_id j) const { return out_.at(j); }
  const std::vector<node_id>& in_neighbors(node_id j) const { return in_.at(j); }
  /// Link indices of j's outgoing / incoming edges, aligned with the neighbor lists.
  const std::vector<std::size_t>& out_links(node_id j) const { return out_edge_.at(j); }
  const std::vector<std::size_t>& in_links(node_id j) const { return in_edge_.at(j); }

  std::size_t out_degree(node_id j) const { return out_.at(j).size(); }
  std::size_t in_degree(node_id j) const { return in_.at(j).size(); }

  std::optional<std::size_t> link_index(node_id src, node_id dst) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), edge{src, dst});
    if (it == edges_.end() || *it != edge{src, dst}) return std::nullopt;
    return static_cast<std::size_t>(it - edges_.begin());
  }

  bool has_edge(node_id src, node_id dst) const { return link_index(src, dst).has_value(); }

  friend bool operator==(const digraph& a, const digraph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<edge> edges_;
  std::vector<std::vector<node_id>> out_, in_;
  std::vector<std::vector<std::size_t>> out_edge_, in_edge_;
};

/// Dense column-stochastic weights; entry (l, j) is the weight node j puts on l.
class weight_matrix {
 public:
  explicit weight_matrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t row, std::size_t col) const { return a_[row * n_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return a_[row * n_ + col]; }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

/// p_lj = 1/(1 + d_j^+) for l in N_j^+ and l = j, zero elsewhere.
inline weight_matrix assign_weights(const digraph& g) {
  weight_matrix p(g.size());
  for (node_id j = 0; j < g.size(); ++j) {
    const double w = 1.0 / (1.0 + static_cast<double>(g.out_degree(j)));
    p(j, j) = w;
    for (node_id l : g.out_neighbors(j)) p(l, j) = w;
  }
  return p;
}

namespace detail {

inline std::vector<bool> reachable(const digraph& g, node_id from, bool forward) {
  std::vector<bool> seen(g.size(), false);
  std::vector<node_id> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    node_id v = stack.back();
    stack.pop_back();
    for (node_id w : forward ? g.out_neighbors(v) : g.in_neighbors(v)) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace detail

inline bool is_strongly_connected(const digraph& g) {
  auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  return all(detail::reachable(g, 0, true)) && all(detail::reachable(g, 0, false));
}

// Edge-list text format:
//
//   # comment
//   n <count>
//   <src> <dst>      (1-based, src transmits to dst)
//
// Blank lines and '#' comments are ignored.  The header must precede edges.
inline digraph parse_graph(std::istream& in) {
  std::optional<std::size_t> n;
  std::vector<edge> edges;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "n") {
      if (n) throw parse_error(lineno, "duplicate header");
      long long count = 0;
      std::string extra;
      if (!(ls >> count) || (ls >> extra) || count <= 0)
        throw parse_error(lineno, "malformed header, expected 'n <count>'");
      n = static_cast<std::size_t>(count);
      continue;
    }
    if (!n) throw parse_error(lineno, "edge before 'n <count>' header");
    long long src = 0, dst = 0;
    std::string extra;
    std::istringstream es(raw);
    if (!(es >> src >> dst) || (es >> extra)) throw parse_error(lineno, "malformed edge, expected '<src> <dst>'");
    if (src < 1 || dst < 1 || static_cast<std::size_t>(src) > *n || static_cast<std::size_t>(dst) > *n)
      throw parse_error(lineno, "node index out of range");
    if (src == dst) throw parse_error(lineno, "explicit self-loop");
    edge e{static_cast<node_id>(src - 1), static_cast<node_id>(dst - 1)};
    if (std::find(edges.begin(), edges.end(), e) != edges.end()) throw parse_error(lineno, "duplicate edge");
    edges.push_back(e);
  }
  if (!n) throw parse_error(lineno, "missing 'n <count>' header");
  return digraph(*n, std::move(edges));
}

inline digraph parse_graph(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_graph(in);
}

inline std::string serialize_graph(const digraph& g) {
  std::ostringstream out;
  out << "n " << g.size() << '\n';
  for (const auto& e : g.edges()) out << e.src + 1 << ' ' << e.dst + 1 << '\n';
  return out.str();
}

// Built-in topologies.  "paper5" is the five node example network whose
// weights are
//
//   1/3  0    0    1/2  0
//   1/3  1/3  0    0    0
//   1/3  1/3  1/2  0    1/3
//   0    0    0    1/2  1/3
//   0    1/3  1/2  0    1/3
//
// and "paper10" the ten node network used for the running-sum comparison.

inline digraph paper5_graph() {
  return parse_graph(
      "n 5\n"
      "1 2\n1 3\n2 3\n2 5\n3 5\n4 1\n5 3\n5 4\n");
}

inline digraph paper10_graph() {
  return parse_graph(
      "n 10\n"
      "1 2\n1 4\n2 1\n3 2\n3 7\n4 5\n4 8\n5 4\n5 6\n"
      "6 7\n7 6\n7 3\n8 4\n8 9\n9 10\n10 7\n10 9\n");
}

inline std::vector<double> paper5_x0() { return {4, 5, 6, 3, 2}; }
inline std::vector<double> paper10_x0() { return {0, 28, 6, 8, 26, -2, 18, 2, 4, 10}; }

inline std::optional<digraph> named_graph(std::string_view name) {
  if (name == "paper5") return paper5_graph();
  if (name == "paper10") return paper10_graph();
  return std::nullopt;
}

inline std::optional<std::vector<double>> named_x0(std::string_view name) {
  if (name == "paper5") return paper5_x0();
  if (name == "paper10") return paper10_x0();
  return std::nullopt;
}

}  // namespace arqrc
