#pragma once

// Permutation-invariant objectives on symmetric matrices and kernels:
//
//   R(W) = 1/2 sum_a weight_a (H_{F_a}(W) - c_a)^2 + psi' * E(W)
//
// with E the scalar entropy integral of h(p) = p log p + (1-p) log(1-p).
// The kernel-valued first variation is
//
//   phi(W)(x,y) = sum_a weight_a (H_{F_a}(W) - c_a) sum_l t_{x,y}(F_{e_l}, W)
//               + psi' * log(W(x,y) / (1 - W(x,y))),
//
// and the matrix gradient is grad R_n = n^-2 (phi at the embedded kernel).
// Gradient convention: R_n is differentiated entrywise over all n^2 entries
// (the symmetric pair counted once in parameter space); with that convention
// n^2 grad R_n equals phi at cell values exactly. The n^-2 scale and the
// edge multiplicity in the sampled triangle estimator below were frozen
// against an exhaustive finite-difference oracle at n = 3; see the README.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "graphon/detail/summation.hpp"
#include "graphon/errors.hpp"
#include "graphon/graphs.hpp"
#include "graphon/rng.hpp"
#include "graphon/step_kernel.hpp"
#include "graphon/sym_matrix.hpp"

namespace graphon {

inline const Box kGradientBox{-1e300, 1e300};

// h(p) with the endpoint convention h(0) = h(1) = 0
inline double entropy_h(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return p * std::log(p) + (1.0 - p) * std::log(1.0 - p);
}

struct HomTerm {
  SimpleGraph graph;
  double target = 0.0;
  double weight = 1.0;
};

struct ObjectiveSpec {
  std::vector<HomTerm> terms;
  double entropy_weight = 0.0;  // psi' in psi = psi' * id
  double eps_clamp = 0.05;      // entropy domain clamp, in (0, 1/2)
  bool clamp_enabled = true;
  Box box = kUnitBox;

  void validate() const {
    if (entropy_weight < 0.0) throw DomainError("ObjectiveSpec: entropy weight must be >= 0");
    if (entropy_weight > 0.0 && (box.lo < 0.0 || box.hi > 1.0))
      throw DomainError("ObjectiveSpec: entropy requires box inside [0,1]");
    if (!(eps_clamp > 0.0 && eps_clamp < 0.5))
      throw DomainError("ObjectiveSpec: eps_clamp must lie in (0, 1/2)");
    for (const auto& t : terms) t.graph.validate();
  }

  double clamped_logit(double z) const {
    if (clamp_enabled) {
      z = std::min(1.0 - eps_clamp, std::max(eps_clamp, z));
    } else if (z <= 0.0 || z >= 1.0) {
      throw DomainError("entropy derivative undefined at {0,1} with clamping disabled");
    }
    return std::log(z / (1.0 - z));
  }
};

// the usual edge/triangle relaxation of entropy minimization with density
// constraints; psi' = 4 makes it strongly convex
inline ObjectiveSpec edge_triangle_spec(double edge_target, double triangle_target,
                                        double psi_prime = 4.0, double weight = 1.0,
                                        double eps_clamp = 0.05) {
  ObjectiveSpec spec;
  spec.terms.push_back({make_edge_graph(), edge_target, weight});
  spec.terms.push_back({make_triangle_graph(), triangle_target, weight});
  spec.entropy_weight = psi_prime;
  spec.eps_clamp = eps_clamp;
  spec.box = kUnitBox;
  return spec;
}

inline ObjectiveSpec entropy_only_spec(double psi_prime = 1.0, double eps_clamp = 0.05) {
  ObjectiveSpec spec;
  spec.entropy_weight = psi_prime;
  spec.eps_clamp = eps_clamp;
  spec.box = kUnitBox;
  return spec;
}

// --- first variation ---------------------------------------------------------

// phi_{H_F}(W), symmetrized over the pinning orientation of each edge
inline StepKernel hom_phi(const SimpleGraph& f, const StepKernel& w) {
  const int m = w.resolution();
  StepKernel out(m, kGradientBox);
  for (int l = 0; l < f.edge_count(); ++l) {
    const StepKernel t = partial_density_all(f, l, w);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        out.values()[static_cast<std::size_t>(a) * m + b] += 0.5 * (t(a, b) + t(b, a));
  }
  return out;
}

inline StepKernel phi(const StepKernel& w, const ObjectiveSpec& spec) {
  spec.validate();
  const int m = w.resolution();
  StepKernel out(m, kGradientBox);

  for (const HomTerm& term : spec.terms) {
    const double residual = term.weight * (hom_density(term.graph, w) - term.target);
    const StepKernel hp = hom_phi(term.graph, w);
    for (std::size_t i = 0; i < out.values().size(); ++i)
      out.values()[i] += residual * hp.values()[i];
  }
  if (spec.entropy_weight > 0.0) {
    for (std::size_t i = 0; i < out.values().size(); ++i)
      out.values()[i] += spec.entropy_weight * spec.clamped_logit(w.values()[i]);
  }
  return out;
}

// phi at the embedded kernel, as a matrix; equals n^2 grad R_n
inline SymMatrix phi_matrix(const SymMatrix& a, const ObjectiveSpec& spec) {
  const StepKernel p = phi(embed_kernel(a), spec);
  SymMatrix out(a.size(), kGradientBox);
  for (int i = 0; i < a.size(); ++i)
    for (int j = i; j < a.size(); ++j) out.set_unchecked(i, j, p(i, j));
  return out;
}

inline SymMatrix grad_rn(const SymMatrix& a, const ObjectiveSpec& spec) {
  const double inv_n2 = 1.0 / (static_cast<double>(a.size()) * a.size());
  SymMatrix out = phi_matrix(a, spec);
  for (double& v : out.packed()) v *= inv_n2;
  return out;
}

// --- objective value ---------------------------------------------------------

inline double eval_rn(const SymMatrix& a, const ObjectiveSpec& spec) {
  spec.validate();
  const StepKernel w = embed_kernel(a);
  double value = 0.0;
  for (const HomTerm& term : spec.terms) {
    const double r = hom_density(term.graph, w) - term.target;
    value += 0.5 * term.weight * r * r;
  }
  if (spec.entropy_weight > 0.0) {
    const int n = a.size();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) terms.push_back(entropy_h(a(i, j)));
    value += spec.entropy_weight * detail::canonical_sum(std::move(terms)) /
             (static_cast<double>(n) * n);
  }
  return value;
}

// --- stochastic gradient (edge-triangle form) --------------------------------

struct XiSample {
  std::array<int, 6> idx{};  // i1..i6, 0-based
};

inline XiSample draw_xi(int n, RngStream& stream) {
  XiSample xi;
  for (int& v : xi.idx) v = stream.uniform_int(n);
  return xi;
}

namespace detail {

struct EdgeTriangleShape {
  double edge_weight, edge_target;
  double tri_weight, tri_target;
};

inline EdgeTriangleShape edge_triangle_shape(const ObjectiveSpec& spec) {
  const HomTerm* edge = nullptr;
  const HomTerm* tri = nullptr;
  for (const HomTerm& t : spec.terms) {
    if (t.graph.k == 2 && t.graph.edge_count() == 1 && !edge)
      edge = &t;
    else if (t.graph.k == 3 && t.graph.edge_count() == 3 && !tri)
      tri = &t;
    else
      throw DomainError("stochastic gradient requires the edge-triangle objective");
  }
  if (!edge || !tri) throw DomainError("stochastic gradient requires the edge-triangle objective");
  return {edge->weight, edge->target, tri->weight, tri->target};
}

}  // namespace detail

// Unbiased single-sample estimate of phi at the embedded kernel (the n^2
// scale). The triangle estimator carries the edge multiplicity 3 of
// phi_{H_triangle}; exhaustive averaging over xi in [n]^6 reproduces
// phi_matrix exactly.
inline SymMatrix stochastic_phi_sample(const SymMatrix& a, const ObjectiveSpec& spec,
                                       const XiSample& xi) {
  spec.validate();
  if (spec.box.lo < 0.0 || spec.box.hi > 1.0)
    throw DomainError("stochastic gradient requires a box inside [0,1]");
  const auto shape = detail::edge_triangle_shape(spec);
  const int n = a.size();
  const auto& q = xi.idx;

  const double edge_part = shape.edge_weight * (a(q[0], q[1]) - shape.edge_target);
  const double tri_residual =
      3.0 * shape.tri_weight * (a(q[2], q[3]) * a(q[3], q[4]) * a(q[4], q[2]) - shape.tri_target);

  SymMatrix out(n, kGradientBox);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double g = edge_part + tri_residual * a(i, q[5]) * a(q[5], j);
      if (spec.entropy_weight > 0.0) g += spec.entropy_weight * spec.clamped_logit(a(i, j));
      out.set_unchecked(i, j, g);
    }
  return out;
}

// unbiased estimate of grad R_n itself: E_xi[stochastic_grad] = grad_rn
inline SymMatrix stochastic_grad(const SymMatrix& a, const ObjectiveSpec& spec,
                                 const XiSample& xi) {
  SymMatrix out = stochastic_phi_sample(a, spec, xi);
  const double inv_n2 = 1.0 / (static_cast<double>(a.size()) * a.size());
  for (double& v : out.packed()) v *= inv_n2;
  return out;
}

inline SymMatrix stochastic_grad(const SymMatrix& a, const ObjectiveSpec& spec,
                                 const RngSpec& rng) {
  RngStream stream = rng.stream(rng_tag::kXi);
  return stochastic_grad(a, spec, draw_xi(a.size(), stream));
}

// --- reported constants -------------------------------------------------------

struct LipschitzConstants {
  double kappa2 = 0.0;    // L2 Lipschitz bound for phi
  double kappa_cut = 0.0; // cellwise cut-norm Lipschitz bound for the hom part
  double m_inf = 0.0;     // sup-norm bound for phi on the box
  double sigma = 0.0;     // variance bound for the stochastic gradient
};

// Documented upper bounds, not measured values: per hom term m(m-1) for the
// pinned densities plus m^2 from the residual, an entropy contribution of
// 2/(eps(1-eps)), and kappa_cut = (#terms) * max_m^2.
inline LipschitzConstants lipschitz_constants(const ObjectiveSpec& spec) {
  spec.validate();
  LipschitzConstants out;
  const double bound = std::max({std::abs(spec.box.lo), std::abs(spec.box.hi), 1.0});
  int max_m = 0;
  for (const HomTerm& t : spec.terms) {
    const double m = t.graph.edge_count();
    out.kappa2 += t.weight * (m * m + m * (m - 1.0));
    const double hmax = std::pow(bound, m);
    const double tmax = m * std::pow(bound, m - 1.0);
    out.m_inf += t.weight * (hmax + std::abs(t.target)) * tmax;
    out.sigma += 2.0 * t.weight * (hmax + std::abs(t.target)) * tmax;
    max_m = std::max(max_m, t.graph.edge_count());
  }
  out.kappa_cut = static_cast<double>(spec.terms.size()) * max_m * max_m;
  if (spec.entropy_weight > 0.0) {
    const double eps = spec.eps_clamp;
    out.kappa2 += spec.entropy_weight * 2.0 / (eps * (1.0 - eps));
    out.m_inf += spec.entropy_weight * std::log((1.0 - eps) / eps);
  }
  return out;
}

}  // namespace graphon
