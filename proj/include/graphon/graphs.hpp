#pragma once

// Simple graphs and homomorphism densities of step kernels. Densities are
// computed exactly by variable elimination over cell assignments (greedy
// min-degree order), so cost is exponential only in the treewidth.
//
// Reductions that a cell relabeling permutes are summed in canonical order
// (see detail/summation.hpp); densities are therefore bitwise invariant and
// pinned densities bitwise equivariant under cell permutations.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "graphon/detail/summation.hpp"
#include "graphon/errors.hpp"
#include "graphon/step_kernel.hpp"

namespace graphon {

struct SimpleGraph {
  int k = 0;                              // vertex count, vertices 0..k-1
  std::vector<std::pair<int, int>> edges; // unordered pairs, stored u < v
  std::string name;

  int edge_count() const { return static_cast<int>(edges.size()); }

  void validate() const {
    if (k <= 0) throw DomainError("SimpleGraph: need at least one vertex");
    std::vector<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
      if (u == v) throw DomainError("SimpleGraph: self-loop at vertex " + std::to_string(u + 1));
      if (u < 0 || v < 0 || u >= k || v >= k)
        throw DomainError("SimpleGraph: edge endpoint outside vertex range");
      auto e = std::minmax(u, v);
      if (std::find(seen.begin(), seen.end(), std::pair<int, int>(e.first, e.second)) != seen.end())
        throw DomainError("SimpleGraph: duplicate edge");
      seen.emplace_back(e.first, e.second);
    }
  }
};

inline SimpleGraph make_edge_graph() { return {2, {{0, 1}}, "edge"}; }
inline SimpleGraph make_path2_graph() { return {3, {{0, 1}, {1, 2}}, "path2"}; }
inline SimpleGraph make_triangle_graph() { return {3, {{0, 1}, {1, 2}, {0, 2}}, "triangle"}; }
inline SimpleGraph make_cycle4_graph() { return {4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, "cycle4"}; }

// Edge-list file: header `# graph k=<k>`, then one `u v` pair per line, 1-based.
inline SimpleGraph read_graph_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open: " + path);
  std::string header;
  if (!std::getline(is, header)) throw IOError(path + ": empty file");
  int k = 0;
  if (std::sscanf(header.c_str(), "# graph k=%d", &k) != 1 || k <= 0)
    throw IOError(path + ": bad header `" + header + "`");
  SimpleGraph g;
  g.k = k;
  g.name = path;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    int u = 0, v = 0;
    if (std::sscanf(line.c_str(), "%d %d", &u, &v) != 2)
      throw IOError(path + ": bad edge line `" + line + "`");
    g.edges.emplace_back(std::min(u, v) - 1, std::max(u, v) - 1);
  }
  g.validate();
  return g;
}

inline void write_graph_file(const SimpleGraph& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot open for writing: " + path);
  os << "# graph k=" << g.k << "\n";
  for (auto [u, v] : g.edges) os << (u + 1) << " " << (v + 1) << "\n";
}

namespace detail {

struct Factor {
  std::vector<int> vars;     // sorted vertex ids
  std::vector<double> data;  // m^|vars| values, row-major in vars order
};

inline std::size_t pow_size(int m, std::size_t k) {
  std::size_t s = 1;
  while (k--) s *= static_cast<std::size_t>(m);
  return s;
}

// joins the given factors over the union of their variables, then sums out
// `victim` with weight 1/m per assignment slice
inline Factor eliminate_var(const std::vector<Factor>& group, int victim, int m) {
  std::vector<int> uni;
  for (const Factor& f : group)
    for (int v : f.vars)
      if (std::find(uni.begin(), uni.end(), v) == uni.end()) uni.push_back(v);
  std::sort(uni.begin(), uni.end());

  std::vector<int> kept;
  for (int v : uni)
    if (v != victim) kept.push_back(v);

  // strides of each factor w.r.t. (kept..., victim) assignment walk
  struct Walk {
    const Factor* f;
    std::vector<std::size_t> kept_stride;  // per kept var
    std::size_t victim_stride = 0;
  };
  std::vector<Walk> walks;
  for (const Factor& f : group) {
    Walk wk{&f, std::vector<std::size_t>(kept.size(), 0), 0};
    std::size_t stride = 1;
    for (int i = static_cast<int>(f.vars.size()) - 1; i >= 0; --i) {
      const int var = f.vars[i];
      if (var == victim) {
        wk.victim_stride = stride;
      } else {
        const auto it = std::find(kept.begin(), kept.end(), var);
        wk.kept_stride[it - kept.begin()] = stride;
      }
      stride *= static_cast<std::size_t>(m);
    }
    walks.push_back(std::move(wk));
  }

  Factor out;
  out.vars = kept;
  out.data.assign(pow_size(m, kept.size()), 0.0);

  std::vector<int> assign(kept.size(), 0);
  std::vector<double> terms(static_cast<std::size_t>(m));
  const double inv_m = 1.0 / m;
  for (std::size_t idx = 0; idx < out.data.size(); ++idx) {
    for (int c = 0; c < m; ++c) {
      double prod = 1.0;
      for (const Walk& wk : walks) {
        std::size_t off = wk.victim_stride * static_cast<std::size_t>(c);
        for (std::size_t v = 0; v < kept.size(); ++v)
          off += wk.kept_stride[v] * static_cast<std::size_t>(assign[v]);
        prod *= wk.f->data[off];
      }
      terms[static_cast<std::size_t>(c)] = prod;
    }
    out.data[idx] = canonical_sum(terms) * inv_m;
    // advance the kept-var assignment, last var fastest
    for (int v = static_cast<int>(kept.size()) - 1; v >= 0; --v) {
      if (++assign[v] < m) break;
      assign[v] = 0;
    }
  }
  return out;
}

// eliminates every vertex of F not listed in `keep`; returns the remaining
// factors (all defined over subsets of `keep`) and the product of scalars
inline std::vector<Factor> run_elimination(const SimpleGraph& f, const StepKernel& w,
                                           const std::vector<int>& keep,
                                           const std::vector<std::pair<int, int>>& edges) {
  const int m = w.resolution();
  std::vector<Factor> factors;
  for (auto [u, v] : edges) {
    Factor fac;
    fac.vars = {std::min(u, v), std::max(u, v)};
    fac.data.resize(static_cast<std::size_t>(m) * m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) fac.data[static_cast<std::size_t>(a) * m + b] = w(a, b);
    factors.push_back(std::move(fac));
  }

  std::vector<int> todo;
  for (int v = 0; v < f.k; ++v)
    if (std::find(keep.begin(), keep.end(), v) == keep.end()) todo.push_back(v);

  while (!todo.empty()) {
    // greedy min-degree: fewest distinct neighbors among live factors
    int best = -1;
    std::size_t best_deg = 0;
    for (int v : todo) {
      std::vector<int> nb;
      for (const Factor& fac : factors)
        if (std::find(fac.vars.begin(), fac.vars.end(), v) != fac.vars.end())
          for (int u : fac.vars)
            if (u != v && std::find(nb.begin(), nb.end(), u) == nb.end()) nb.push_back(u);
      if (best < 0 || nb.size() < best_deg) {
        best = v;
        best_deg = nb.size();
      }
    }

    std::vector<Factor> group, rest;
    for (Factor& fac : factors) {
      if (std::find(fac.vars.begin(), fac.vars.end(), best) != fac.vars.end())
        group.push_back(std::move(fac));
      else
        rest.push_back(std::move(fac));
    }
    if (!group.empty()) rest.push_back(eliminate_var(group, best, m));
    // an isolated vertex integrates to 1 and leaves no factor
    factors = std::move(rest);
    todo.erase(std::find(todo.begin(), todo.end(), best));
  }
  return factors;
}

}  // namespace detail

// all-maps homomorphism density of F in W (kernel form)
inline double hom_density(const SimpleGraph& f, const StepKernel& w) {
  f.validate();
  const auto factors = detail::run_elimination(f, w, {}, f.edges);
  double out = 1.0;
  for (const auto& fac : factors) out *= fac.data.at(0);
  return out;
}

// t_{x,y}(F_e, W) for every grid cell (x row, y column): the density of F
// with edge `edge_index` removed and its endpoints pinned. Oriented by the
// stored (u,v); symmetric for edge-transitive graphs.
inline StepKernel partial_density_all(const SimpleGraph& f, int edge_index, const StepKernel& w) {
  f.validate();
  if (edge_index < 0 || edge_index >= f.edge_count())
    throw EdgeNotInGraph("partial_density_all: edge index " + std::to_string(edge_index) +
                         " not in graph with " + std::to_string(f.edge_count()) + " edges");
  const int m = w.resolution();
  const auto [p, q] = f.edges[static_cast<std::size_t>(edge_index)];

  std::vector<std::pair<int, int>> rest_edges;
  for (int l = 0; l < f.edge_count(); ++l)
    if (l != edge_index) rest_edges.push_back(f.edges[static_cast<std::size_t>(l)]);

  const auto factors = detail::run_elimination(f, w, {p, q}, rest_edges);

  StepKernel out(m, Box{-1e300, 1e300});
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double prod = 1.0;
      for (const auto& fac : factors) {
        std::size_t off = 0;
        for (int var : fac.vars) {
          const int cell = var == p ? a : b;
          off = off * static_cast<std::size_t>(m) + static_cast<std::size_t>(cell);
        }
        prod *= fac.data[off];
      }
      out.values()[static_cast<std::size_t>(a) * m + b] = prod;
    }
  return out;
}

inline double partial_density(const SimpleGraph& f, int edge_index, const StepKernel& w, int a,
                              int b) {
  return partial_density_all(f, edge_index, w)(a, b);
}

}  // namespace graphon
