#include "vizier/dependency.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

namespace vizier {

Dependencies dependencies(const Formula& f, const SheetState& state, Position host) {
  Dependencies out;
  const CoordinateSystem& cs = state.coords();
  auto add_pos = [&](Position p) {
    if (auto id = cs.at(p)) {
      out.cells.insert(*id);
    } else {
      out.has_dangling = true;
    }
  };
  visit_nodes(f.root(), [&](const Expr& e) {
    if (auto* r = e.as<node::Ref>()) {
      add_pos(r->ref.target(host));
    } else if (auto* x = e.as<node::Explicit>()) {
      if (state.cell(x->id) && cs.position_of(x->id)) {
        out.cells.insert(x->id);
      } else {
        out.has_dangling = true;
      }
    } else if (e.as<node::Dangling>()) {
      out.has_dangling = true;
    } else if (auto* c = e.as<node::Column>()) {
      auto idx = cs.column_index(c->name);
      if (idx) {
        add_pos(Position{*idx, host.row});
      } else {
        out.has_dangling = true;
      }
    } else if (auto* rg = e.as<node::Range>()) {
      Position a = rg->from.target(host), b = rg->to.target(host);
      Position lo{std::min(a.col, b.col), std::min(a.row, b.row)};
      Position hi{std::max(a.col, b.col), std::max(a.row, b.row)};
      if (!cs.in_bounds(lo) || !cs.in_bounds(hi)) {
        out.has_dangling = true;
        return;
      }
      for (std::int64_t r = lo.row; r <= hi.row; ++r) {
        for (std::int64_t col = lo.col; col <= hi.col; ++col) add_pos(Position{col, r});
      }
    }
  });
  return out;
}

namespace {

struct Graph {
  std::vector<CellId> nodes;
  std::unordered_map<CellId, std::size_t> index;
  std::vector<std::vector<std::size_t>> deps;  // cell -> cells it reads
};

Graph build_graph(const SheetState& state) {
  Graph g;
  for (const auto& [id, cell] : state.cells()) {
    if (!state.coords().position_of(id)) continue;
    g.index[id] = g.nodes.size();
    g.nodes.push_back(id);
  }
  g.deps.resize(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Cell& c = *state.cell(g.nodes[i]);
    if (c.formula.is_literal()) continue;
    auto pos = *state.coords().position_of(g.nodes[i]);
    for (CellId d : dependencies(c.formula, state, pos).cells) {
      auto it = g.index.find(d);
      if (it != g.index.end()) g.deps[i].push_back(it->second);
    }
  }
  return g;
}

/// Iterative Tarjan over the nodes with `active[i]` set. SCCs are emitted
/// dependencies-first, which is an evaluation order.
std::vector<std::vector<std::size_t>> strongly_connected(const Graph& g,
                                                         const std::vector<bool>& active) {
  const std::size_t n = g.nodes.size();
  const std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  std::size_t counter = 0;
  struct Frame {
    std::size_t node;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (!active[root] || index[root] != unvisited) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& edges = g.deps[f.node];
      if (f.edge < edges.size()) {
        std::size_t w = edges[f.edge++];
        if (!active[w]) continue;
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      std::size_t v = f.node;
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> scc;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc.push_back(w);
        } while (w != v);
        out.push_back(std::move(scc));
      }
    }
  }
  return out;
}

bool is_cyclic(const Graph& g, const std::vector<std::size_t>& scc) {
  if (scc.size() > 1) return true;
  const auto& d = g.deps[scc[0]];
  return std::find(d.begin(), d.end(), scc[0]) != d.end();
}

}  // namespace

SheetState recompute(const SheetState& state, const std::set<CellId>& dirty) {
  if (dirty.empty()) return state;
  Graph g = build_graph(state);
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> readers(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d : g.deps[i]) readers[d].push_back(i);
  }
  std::vector<bool> active(n, false);
  std::vector<std::size_t> work;
  for (CellId id : dirty) {
    auto it = g.index.find(id);
    if (it != g.index.end() && !active[it->second]) {
      active[it->second] = true;
      work.push_back(it->second);
    }
  }
  while (!work.empty()) {
    std::size_t v = work.back();
    work.pop_back();
    for (std::size_t r : readers[v]) {
      if (!active[r]) {
        active[r] = true;
        work.push_back(r);
      }
    }
  }
  SheetState next = state;
  for (const auto& scc : strongly_connected(g, active)) {
    if (is_cyclic(g, scc)) {
      for (std::size_t i : scc) next.set_value(g.nodes[i], Value::error(ErrorKind::Cycle));
      continue;
    }
    CellId id = g.nodes[scc[0]];
    const Cell& c = *next.cell(id);
    next.set_value(id, evaluate(c.formula, next, *next.coords().position_of(id)));
  }
  return next;
}

SheetState recompute_all(const SheetState& state) {
  std::set<CellId> all;
  for (const auto& [id, cell] : state.cells()) all.insert(id);
  return recompute(state, all);
}

std::set<CellId> cyclic_cells(const SheetState& state) {
  Graph g = build_graph(state);
  std::vector<bool> active(g.nodes.size(), true);
  std::set<CellId> out;
  for (const auto& scc : strongly_connected(g, active)) {
    if (!is_cyclic(g, scc)) continue;
    for (std::size_t i : scc) out.insert(g.nodes[i]);
  }
  return out;
}

std::vector<std::vector<CellId>> detect_cycles(const SheetState& state) {
  Graph g = build_graph(state);
  const std::size_t n = g.nodes.size();
  std::vector<bool> all(n, true);
  std::vector<std::size_t> component(n, 0);
  std::size_t cid = 0;
  for (const auto& scc : strongly_connected(g, all)) {
    for (std::size_t i : scc) component[i] = cid;
    ++cid;
  }
  // Nodes are in ascending id order, so "start at the smallest id" means
  // only visiting nodes with a larger index than the start.
  std::vector<std::vector<CellId>> out;
  std::vector<std::size_t> path;
  std::vector<bool> on_path(n, false);
  std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t start, std::size_t v) {
    for (std::size_t w : g.deps[v]) {
      if (component[w] != component[start] || w < start) continue;
      if (w == start) {
        std::vector<CellId> cycle;
        for (std::size_t p : path) cycle.push_back(g.nodes[p]);
        out.push_back(std::move(cycle));
      } else if (!on_path[w]) {
        on_path[w] = true;
        path.push_back(w);
        dfs(start, w);
        path.pop_back();
        on_path[w] = false;
      }
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    path = {s};
    on_path[s] = true;
    dfs(s, s);
    on_path[s] = false;
  }
  return out;
}

}  // namespace vizier
