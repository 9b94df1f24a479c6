#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grouplearn {

// Directed network with mandatory self-loops. An edge (j, i) means agent i
// observes agent j; self-loops are inserted at construction so that
// [A]_ij = 1 exactly when j is in i's neighborhood.
class DiGraph {
 public:
  DiGraph(int n, const std::vector<std::pair<int, int>>& edges) : n_(n) {
    if (n < 1) throw std::invalid_argument("graph needs at least one node");
    adj_ = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) adj_(i, i) = 1.0;
    for (auto [j, i] : edges) {
      check_id(j);
      check_id(i);
      adj_(i, j) = 1.0;
    }
    in_.resize(n);
    out_.resize(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (adj_(i, j) != 0.0) {
          in_[i].push_back(j);
          out_[j].push_back(i);
        }
  }

  static DiGraph cycle(int n) {
    std::vector<std::pair<int, int>> e;
    for (int j = 0; j < n; ++j) e.emplace_back(j, (j + 1) % n);
    return DiGraph(n, e);
  }

  static DiGraph complete(int n) {
    std::vector<std::pair<int, int>> e;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (i != j) e.emplace_back(j, i);
    return DiGraph(n, e);
  }

  // hub 0 with bidirectional links to every leaf
  static DiGraph star(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i < n; ++i) {
      e.emplace_back(0, i);
      e.emplace_back(i, 0);
    }
    return DiGraph(n, e);
  }

  // balanced d-regular circulant: node i observes i-1, ..., i-(d-1) mod n
  static DiGraph regular(int n, int d) {
    if (d < 1 || d > n) throw std::invalid_argument("regular degree out of range");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
      for (int step = 1; step < d; ++step) e.emplace_back(((i - step) % n + n) % n, i);
    return DiGraph(n, e);
  }

  // edge-list text: one "j i" pair per line (0-indexed), blank lines ignored
  static DiGraph from_edge_list(std::istream& in) {
    std::vector<std::pair<int, int>> edges;
    int max_id = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      int j, i;
      if (!(ls >> j >> i)) throw std::invalid_argument("bad edge-list line: " + line);
      if (j < 0 || i < 0) throw std::invalid_argument("negative node id: " + line);
      edges.emplace_back(j, i);
      max_id = std::max({max_id, i, j});
    }
    if (edges.empty()) throw std::invalid_argument("empty edge list");
    return DiGraph(max_id + 1, edges);
  }

  int size() const { return n_; }

  // includes the self-loop diagonal; this is the paper's I + A support
  const Eigen::MatrixXd& adjacency() const { return adj_; }

  const std::vector<int>& in_neighborhood(int i) const {
    check_id(i);
    return in_[i];
  }

  const std::vector<int>& out_neighborhood(int j) const {
    check_id(j);
    return out_[j];
  }

  bool is_strongly_connected() const {
    return reaches_all(in_) && reaches_all(out_);
  }

  // Some(d) iff |N_i| = |N_i^out| = d for every node, self-loop counted
  std::optional<int> balanced_regular_degree() const {
    const int d = static_cast<int>(in_[0].size());
    for (int i = 0; i < n_; ++i)
      if (static_cast<int>(in_[i].size()) != d || static_cast<int>(out_[i].size()) != d)
        return std::nullopt;
    return d;
  }

 private:
  void check_id(int i) const {
    if (i < 0 || i >= n_) throw std::out_of_range("agent id out of range");
  }

  bool reaches_all(const std::vector<std::vector<int>>& nbrs) const {
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : nbrs[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  }

  int n_;
  Eigen::MatrixXd adj_;
  std::vector<std::vector<int>> in_, out_;
};

}  // namespace grouplearn
