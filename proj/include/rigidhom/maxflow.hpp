#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "core.hpp"

namespace rigidhom {

/// Dinic max-flow on real capacities. Arcs are scanned in insertion order, so the
/// flow and the returned cut depend only on the order in which edges were added.
class MaxFlow {
public:
  explicit MaxFlow(int n) : head_(static_cast<std::size_t>(n), -1) {}

  int nodes() const { return static_cast<int>(head_.size()); }

  /// Adds u->v with capacity cuv and v->u with capacity cvu (one residual pair).
  void add_edge(int u, int v, double cuv, double cvu = 0.0) {
    if (cuv < 0.0 || cvu < 0.0) throw InvalidArgument("negative capacity");
    push_arc(u, v, cuv);
    push_arc(v, u, cvu);
    max_cap_ = std::max({max_cap_, cuv, cvu});
  }

  /// Capacity that is never saturated by finite edges added so far. Call after
  /// all finite edges are in.
  double infinite_capacity() const { return 4.0 * total_ + 1.0; }

  double solve(int s, int t) {
    finalize();
    tol_ = 1e-13 * std::max(1.0, max_cap_);
    double flow = 0.0;
    while (bfs(s, t)) {
      iter_ = start_;
      flow += augment(s, t);
    }
    s_ = s;
    return flow;
  }

  /// Nodes reachable from the source in the final residual graph: the smallest
  /// source side among all minimum cuts.
  std::vector<std::uint8_t> source_side() const {
    std::vector<std::uint8_t> seen(head_.size(), 0);
    std::vector<int> stack{s_};
    seen[static_cast<std::size_t>(s_)] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int a = start_[u]; a < start_[u + 1]; ++a) {
        const int v = to_[a];
        if (cap_[a] > tol_ && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    return seen;
  }

private:
  struct RawArc {
    int from, to;
    double cap;
  };

  void push_arc(int u, int v, double c) {
    raw_.push_back({u, v, c});
    total_ += c;
  }

  // CSR layout; partner arcs are linked through rev_.
  void finalize() {
    const int n = nodes();
    start_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto &a : raw_) ++start_[static_cast<std::size_t>(a.from) + 1];
    for (int i = 0; i < n; ++i) start_[i + 1] += start_[i];
    std::vector<int> pos(start_.begin(), start_.end() - 1);
    const std::size_t m = raw_.size();
    to_.assign(m, 0);
    cap_.assign(m, 0.0);
    rev_.assign(m, 0);
    std::vector<int> slot(m);
    for (std::size_t k = 0; k < m; ++k) {
      const int p = pos[static_cast<std::size_t>(raw_[k].from)]++;
      slot[k] = p;
      to_[p] = raw_[k].to;
      cap_[p] = raw_[k].cap;
    }
    for (std::size_t k = 0; k < m; k += 2) {
      rev_[slot[k]] = slot[k + 1];
      rev_[slot[k + 1]] = slot[k];
    }
  }

  bool bfs(int s, int t) {
    level_.assign(head_.size(), -1);
    std::vector<int> queue{s};
    level_[static_cast<std::size_t>(s)] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int u = queue[q];
      for (int a = start_[u]; a < start_[u + 1]; ++a) {
        const int v = to_[a];
        if (cap_[a] > tol_ && level_[static_cast<std::size_t>(v)] < 0) {
          level_[static_cast<std::size_t>(v)] = level_[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  // Iterative blocking-flow search on the level graph.
  double augment(int s, int t) {
    double total = 0.0;
    std::vector<int> path;
    int u = s;
    while (true) {
      if (u == t) {
        double b = std::numeric_limits<double>::infinity();
        for (int a : path) b = std::min(b, cap_[a]);
        for (int a : path) {
          cap_[a] -= b;
          cap_[rev_[a]] += b;
        }
        total += b;
        path.clear();
        u = s;
        continue;
      }
      int &it = iter_[u];
      for (; it < start_[u + 1]; ++it) {
        const int v = to_[it];
        if (cap_[it] > tol_ && level_[static_cast<std::size_t>(v)] == level_[static_cast<std::size_t>(u)] + 1) break;
      }
      if (it < start_[u + 1]) {
        path.push_back(it);
        u = to_[it];
        continue;
      }
      if (u == s) break;
      level_[static_cast<std::size_t>(u)] = -1; // dead end
      const int a = path.back();
      path.pop_back();
      u = to_[rev_[a]];
    }
    return total;
  }

  std::vector<int> head_;
  std::vector<RawArc> raw_;
  std::vector<int> start_, to_, rev_, iter_;
  std::vector<double> cap_;
  std::vector<int> level_;
  double max_cap_ = 0.0, total_ = 0.0, tol_ = 0.0;
  int s_ = 0;
};

} // namespace rigidhom
