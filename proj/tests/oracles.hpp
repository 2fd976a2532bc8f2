#pragma once

// Test-only oracles, deliberately independent of the library's computation
// paths: naive loop evaluators over full (possibly asymmetric) matrices, a
// central-difference gradient, and a brute-force cut norm.

#include <cmath>
#include <cstdint>
#include <vector>

#include "graphon/rng.hpp"
#include "graphon/step_kernel.hpp"
#include "graphon/sym_matrix.hpp"

namespace oracle {

using Full = std::vector<std::vector<double>>;

inline Full to_full(const graphon::SymMatrix& a) {
  const int n = a.size();
  Full m(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = a(i, j);
  return m;
}

inline double edge_density(const Full& m) {
  const int n = static_cast<int>(m.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += m[i][j];
  return s / (static_cast<double>(n) * n);
}

inline double triangle_density(const Full& m) {
  const int n = static_cast<int>(m.size());
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s += m[a][b] * m[b][c] * m[c][a];
  return s / (static_cast<double>(n) * n * n);
}

inline double path2_density(const Full& m) {
  const int n = static_cast<int>(m.size());
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s += m[a][b] * m[b][c];
  return s / (static_cast<double>(n) * n * n);
}

inline double entropy_mean(const Full& m) {
  const int n = static_cast<int>(m.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double p = m[i][j];
      if (p > 0.0 && p < 1.0) s += p * std::log(p) + (1.0 - p) * std::log(1.0 - p);
    }
  return s / (static_cast<double>(n) * n);
}

// 1/2 we (edge - e)^2 + 1/2 wt (tri - tau)^2 + 1/2 wp (path2 - cp)^2 + psi' E
struct Params {
  double edge_weight = 0.0, edge_target = 0.0;
  double tri_weight = 0.0, tri_target = 0.0;
  double path2_weight = 0.0, path2_target = 0.0;
  double psi_prime = 0.0;
};

inline double eval(const Full& m, const Params& p) {
  double v = 0.0;
  if (p.edge_weight != 0.0) {
    const double r = edge_density(m) - p.edge_target;
    v += 0.5 * p.edge_weight * r * r;
  }
  if (p.tri_weight != 0.0) {
    const double r = triangle_density(m) - p.tri_target;
    v += 0.5 * p.tri_weight * r * r;
  }
  if (p.path2_weight != 0.0) {
    const double r = path2_density(m) - p.path2_target;
    v += 0.5 * p.path2_weight * r * r;
  }
  if (p.psi_prime != 0.0) v += p.psi_prime * entropy_mean(m);
  return v;
}

// single-entry central differences; rows i, cols j; returns d/dA(i,j) eval
inline Full fd_gradient(const graphon::SymMatrix& a, const Params& p, double h = 1e-6) {
  Full m = to_full(a);
  const int n = static_cast<int>(m.size());
  Full g(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double keep = m[i][j];
      m[i][j] = keep + h;
      const double up = eval(m, p);
      m[i][j] = keep - h;
      const double dn = eval(m, p);
      m[i][j] = keep;
      g[i][j] = (up - dn) / (2.0 * h);
    }
  return g;
}

// brute force over every pair of row/column subsets; m <= 20 feasible, use <= 12
inline double brute_cut_norm(const graphon::StepKernel& w) {
  const int m = w.resolution();
  double best = 0.0;
  for (std::uint32_t s = 0; s < (1u << m); ++s)
    for (std::uint32_t t = 0; t < (1u << m); ++t) {
      double sum = 0.0;
      for (int i = 0; i < m; ++i)
        if (s & (1u << i))
          for (int j = 0; j < m; ++j)
            if (t & (1u << j)) sum += w(i, j);
      best = std::max(best, std::abs(sum));
    }
  return best / (static_cast<double>(m) * m);
}

// --- random inputs -----------------------------------------------------------

inline graphon::SymMatrix random_matrix(int n, graphon::Box box, graphon::RngStream& rs) {
  graphon::SymMatrix a(n, box, box.mid());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      a.set_unchecked(i, j, box.lo + (box.hi - box.lo) * rs.uniform01());
  return a;
}

inline graphon::SymMatrix random_matrix_in(int n, double lo, double hi, graphon::Box box,
                                           graphon::RngStream& rs) {
  graphon::SymMatrix a(n, box, box.mid());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a.set_unchecked(i, j, lo + (hi - lo) * rs.uniform01());
  return a;
}

inline graphon::StepKernel random_kernel(int m, graphon::Box box, graphon::RngStream& rs) {
  graphon::StepKernel w(m, box);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) w.set(a, b, box.lo + (box.hi - box.lo) * rs.uniform01());
  return w;
}

}  // namespace oracle
