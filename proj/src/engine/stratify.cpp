#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "htp/engine.hpp"
#include "htp/error.hpp"

namespace htp {

namespace {

struct Edge {
  std::size_t to;
  bool negative;
};

struct DependencyGraph {
  std::vector<Predicate> nodes;
  std::map<Predicate, std::size_t> index;
  std::vector<std::vector<Edge>> out;

  explicit DependencyGraph(const Theory& theory) : nodes(theory.predicates()) {
    for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(nodes[i], i);
    out.resize(nodes.size());
    for (const auto& rule : theory.rules) {
      std::size_t head = index.at(rule.consequent.predicate);
      for (const auto& a : rule.antecedents) {
        out[index.at(a.predicate)].push_back({head, !a.positive()});
      }
    }
  }
};

// Tarjan's algorithm; component ids come out in reverse topological order.
std::vector<int> components(const DependencyGraph& g, int& count) {
  const std::size_t n = g.nodes.size();
  std::vector<int> comp(n, -1), low(n, 0), order(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int counter = 0;
  count = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    order[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const auto& e : g.out[v]) {
      if (order[e.to] < 0) {
        visit(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on_stack[e.to]) {
        low[v] = std::min(low[v], order[e.to]);
      }
    }
    if (low[v] == order[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = count;
      } while (w != v);
      ++count;
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (order[v] < 0) visit(v);
  }
  return comp;
}

// Shortest path from `from` back to `to` inside one component, as predicate keys.
std::vector<std::string> cycle_through(const DependencyGraph& g, const std::vector<int>& comp,
                                       std::size_t from, std::size_t to) {
  std::vector<long> parent(g.nodes.size(), -1);
  std::deque<std::size_t> queue{from};
  std::vector<bool> seen(g.nodes.size(), false);
  seen[from] = true;
  while (!queue.empty()) {
    std::size_t v = queue.front();
    queue.pop_front();
    if (v == to) break;
    for (const auto& e : g.out[v]) {
      if (comp[e.to] != comp[from] || seen[e.to]) continue;
      seen[e.to] = true;
      parent[e.to] = static_cast<long>(v);
      queue.push_back(e.to);
    }
  }
  std::vector<std::string> path;
  for (long v = static_cast<long>(to); v >= 0; v = parent[static_cast<std::size_t>(v)]) {
    path.push_back(g.nodes[static_cast<std::size_t>(v)].name);
    if (static_cast<std::size_t>(v) == from) break;
  }
  std::reverse(path.begin(), path.end());
  // A self-loop yields a single-element path; a longer cycle lists each
  // predicate once, starting at the negated condition's head.
  return path;
}

}  // namespace

std::map<Predicate, int> strata(const Theory& theory) {
  DependencyGraph g(theory);
  int count = 0;
  std::vector<int> comp = components(g, count);

  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    for (const auto& e : g.out[v]) {
      if (e.negative && comp[v] == comp[e.to]) {
        throw StratificationError(cycle_through(g, comp, e.to, v));
      }
    }
  }

  // Components in topological order are count-1 .. 0.
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(count));
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    members[static_cast<std::size_t>(comp[v])].push_back(v);
  }
  std::vector<int> level(g.nodes.size(), 0);
  for (int c = count - 1; c >= 0; --c) {
    const auto& group = members[static_cast<std::size_t>(c)];
    // Members of one component share a level.
    int top = 0;
    for (std::size_t v : group) top = std::max(top, level[v]);
    for (std::size_t v : group) level[v] = top;
    for (std::size_t v : group) {
      for (const auto& e : g.out[v]) {
        if (comp[e.to] == c) continue;
        level[e.to] = std::max(level[e.to], top + (e.negative ? 1 : 0));
      }
    }
  }

  std::map<Predicate, int> out;
  for (std::size_t v = 0; v < g.nodes.size(); ++v) out.emplace(g.nodes[v], level[v]);
  return out;
}

void check_stratified(const Theory& theory) { (void)strata(theory); }

void validate_theory(const Theory& theory, WorldAssumption assumption) {
  if (assumption != WorldAssumption::CWA) return;
  for (const auto& f : theory.facts) {
    if (!f.literal.positive()) {
      throw TheoryError("negative fact " + f.id +
                        " is not allowed under the closed-world assumption");
    }
  }
  for (const auto& r : theory.rules) {
    if (!r.consequent.positive()) {
      throw TheoryError("negative consequent in " + r.id +
                        " is not allowed under the closed-world assumption");
    }
  }
  check_stratified(theory);
}

}  // namespace htp
