#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "graphon/cut_norm.hpp"
#include "graphon/objective.hpp"
#include "oracles.hpp"

using namespace graphon;

namespace {

oracle::Params params_for(const ObjectiveSpec& spec) {
  oracle::Params p;
  p.psi_prime = spec.entropy_weight;
  for (const HomTerm& t : spec.terms) {
    if (t.graph.k == 2) {
      p.edge_weight = t.weight;
      p.edge_target = t.target;
    } else if (t.graph.k == 3 && t.graph.edge_count() == 3) {
      p.tri_weight = t.weight;
      p.tri_target = t.target;
    } else if (t.graph.k == 3 && t.graph.edge_count() == 2) {
      p.path2_weight = t.weight;
      p.path2_target = t.target;
    } else {
      FAIL("oracle has no evaluator for this graph");
    }
  }
  return p;
}

double max_rel_phi_error(const SymMatrix& a, const ObjectiveSpec& spec) {
  const auto fd = oracle::fd_gradient(a, params_for(spec));
  const SymMatrix p = phi_matrix(a, spec);
  const double n2 = static_cast<double>(a.size()) * a.size();
  double worst = 0.0, scale = 0.0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j) scale = std::max(scale, std::abs(p(i, j)));
  scale = std::max(scale, 1e-8);
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < a.size(); ++j)
      worst = std::max(worst, std::abs(n2 * fd[i][j] - p(i, j)) / scale);
  return worst;
}

}  // namespace

TEST_CASE("phi closed forms") {
  SECTION("pure edge term: residual everywhere") {
    ObjectiveSpec spec;
    spec.terms.push_back({make_edge_graph(), 0.3, 1.0});
    spec.box = kUnitBox;
    RngStream rs = RngSpec{80}.stream(1);
    const StepKernel w = oracle::random_kernel(4, kUnitBox, rs);
    const double expect = mean_value(w) - 0.3;
    const StepKernel p = phi(w, spec);
    for (double v : p.values()) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(expect, 1e-14));
  }

  SECTION("entropy only at one half vanishes") {
    const ObjectiveSpec spec = entropy_only_spec(1.0);
    const StepKernel w(5, kUnitBox, 0.5);
    const StepKernel p = phi(w, spec);
    for (double v : p.values()) REQUIRE(v == 0.0);
  }

  SECTION("edge-triangle phi matches finite differences at n = 4") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.1, 4.0);
    RngStream rs = RngSpec{81}.stream(1);
    const SymMatrix a = oracle::random_matrix_in(4, 0.15, 0.85, kUnitBox, rs);
    REQUIRE(max_rel_phi_error(a, spec) < 1e-5);
  }

  SECTION("asymmetric pinned densities are symmetrized: path2 term vs fd") {
    ObjectiveSpec spec;
    spec.terms.push_back({make_path2_graph(), 0.2, 1.0});
    spec.box = kUnitBox;
    RngStream rs = RngSpec{82}.stream(1);
    const SymMatrix a = oracle::random_matrix_in(4, 0.2, 0.8, kUnitBox, rs);
    REQUIRE(max_rel_phi_error(a, spec) < 1e-5);
  }

  SECTION("domain error at the boundary when the clamp is off") {
    ObjectiveSpec spec = entropy_only_spec(1.0);
    spec.clamp_enabled = false;
    StepKernel w(2, kUnitBox, 0.5);
    w.set(0, 1, 1.0);
    REQUIRE_THROWS_AS(phi(w, spec), DomainError);
  }
}

TEST_CASE("grad_rn") {
  SECTION("entropy-only at one half is stationary") {
    const ObjectiveSpec spec = entropy_only_spec(1.0);
    const SymMatrix a(4, kUnitBox, 0.5);
    const SymMatrix g = grad_rn(a, spec);
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) REQUIRE(g(i, j) == 0.0);
  }

  SECTION("edge term at a constant matrix: n^-2 (c - e) everywhere") {
    ObjectiveSpec spec;
    spec.terms.push_back({make_edge_graph(), 0.25, 1.0});
    spec.box = kUnitBox;
    const int n = 5;
    const SymMatrix a(n, kUnitBox, 0.6);
    const SymMatrix g = grad_rn(a, spec);
    const auto fd = oracle::fd_gradient(a, params_for(spec));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        REQUIRE_THAT(g(i, j), Catch::Matchers::WithinAbs((0.6 - 0.25) / (n * n), 1e-14));
        REQUIRE_THAT(g(i, j), Catch::Matchers::WithinAbs(fd[i][j], 1e-9));
      }
  }

  SECTION("n^2 grad equals phi at cells exactly") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.1, 1.0);
    RngStream rs = RngSpec{83}.stream(1);
    const SymMatrix a = oracle::random_matrix_in(4, 0.1, 0.9, kUnitBox, rs);
    const SymMatrix g = grad_rn(a, spec);
    const SymMatrix p = phi_matrix(a, spec);
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j)
        REQUIRE(g(i, j) == p(i, j) / 16.0);
  }
}

TEST_CASE("eval_rn") {
  SECTION("satisfied constraints with no entropy give zero") {
    const double e = 0.4;
    ObjectiveSpec spec = edge_triangle_spec(e, e * e * e, 0.0);
    spec.entropy_weight = 0.0;
    const SymMatrix a(6, kUnitBox, e);
    REQUIRE_THAT(eval_rn(a, spec), Catch::Matchers::WithinAbs(0.0, 1e-14));
  }

  SECTION("entropy only at one half is -log 2") {
    const ObjectiveSpec spec = entropy_only_spec(1.0);
    const SymMatrix a(3, kUnitBox, 0.5);
    REQUIRE_THAT(eval_rn(a, spec), Catch::Matchers::WithinAbs(-std::log(2.0), 1e-14));
  }

  SECTION("matches the naive loop oracle at n = 3") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.1, 4.0);
    RngStream rs = RngSpec{84}.stream(1);
    for (int rep = 0; rep < 10; ++rep) {
      const SymMatrix a = oracle::random_matrix(3, kUnitBox, rs);
      REQUIRE_THAT(eval_rn(a, spec),
                   Catch::Matchers::WithinAbs(oracle::eval(oracle::to_full(a), params_for(spec)),
                                              1e-13));
    }
  }

  SECTION("permutation invariance of eval and equivariance of grad") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.1, 4.0);
    RngStream rs = RngSpec{85}.stream(1);
    const SymMatrix a = oracle::random_matrix_in(6, 0.1, 0.9, kUnitBox, rs);
    const std::vector<int> p{4, 2, 0, 5, 1, 3};
    const SymMatrix ap = a.permuted(p);
    REQUIRE(eval_rn(ap, spec) == eval_rn(a, spec));  // bitwise via canonical sums
    const SymMatrix g = grad_rn(a, spec);
    const SymMatrix gp = grad_rn(ap, spec);
    for (int i = 0; i < 6; ++i)
      for (int j = i; j < 6; ++j) REQUIRE(gp(i, j) == g(p[i], p[j]));
  }
}

TEST_CASE("stochastic_grad") {
  SECTION("exhaustive xi average equals grad_rn at n = 3") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.1, 4.0);
    RngStream rs = RngSpec{86}.stream(1);
    for (int rep = 0; rep < 3; ++rep) {
      const SymMatrix a = oracle::random_matrix_in(3, 0.1, 0.9, kUnitBox, rs);
      SymMatrix avg(3, kGradientBox, 0.0);
      XiSample xi;
      for (int t = 0; t < 729; ++t) {
        int v = t;
        for (int z = 0; z < 6; ++z) {
          xi.idx[z] = v % 3;
          v /= 3;
        }
        const SymMatrix g = stochastic_grad(a, spec, xi);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) avg.set_unchecked(i, j, avg(i, j) + g(i, j));
      }
      const SymMatrix g = grad_rn(a, spec);
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
          REQUIRE_THAT(avg(i, j) / 729.0, Catch::Matchers::WithinAbs(g(i, j), 1e-10));
    }
  }

  SECTION("all residuals vanish at the balanced point") {
    const ObjectiveSpec spec = edge_triangle_spec(0.5, 0.125, 4.0);
    const SymMatrix a(3, kUnitBox, 0.5);
    XiSample xi{{0, 1, 2, 0, 1, 2}};
    const SymMatrix g = stochastic_grad(a, spec, xi);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) REQUIRE(g(i, j) == 0.0);
  }

  SECTION("fixed seed draws identical xi") {
    RngStream s1 = RngSpec{87}.stream(rng_tag::kXi);
    RngStream s2 = RngSpec{87}.stream(rng_tag::kXi);
    const XiSample a = draw_xi(10, s1);
    const XiSample b = draw_xi(10, s2);
    REQUIRE(a.idx == b.idx);
  }

  SECTION("requires the edge-triangle shape and a [0,1] box") {
    const ObjectiveSpec wrong = entropy_only_spec(1.0);
    const SymMatrix a(3, kUnitBox, 0.5);
    REQUIRE_THROWS_AS(stochastic_grad(a, wrong, XiSample{}), DomainError);
  }
}

TEST_CASE("lipschitz_constants") {
  SECTION("single triangle term includes the 3*2 pinned-density bound") {
    ObjectiveSpec spec;
    spec.terms.push_back({make_triangle_graph(), 0.1, 1.0});
    spec.box = kUnitBox;
    const auto c = lipschitz_constants(spec);
    REQUIRE(c.kappa2 == 15.0);  // m^2 + m(m-1) = 9 + 6
    REQUIRE(c.kappa_cut == 9.0);
  }

  SECTION("entropy with eps = 0.05") {
    const ObjectiveSpec spec = entropy_only_spec(1.0, 0.05);
    const auto c = lipschitz_constants(spec);
    REQUIRE_THAT(c.kappa2, Catch::Matchers::WithinAbs(2.0 / (0.05 * 0.95), 1e-9));
  }

  SECTION("empty spec reports zeros") {
    ObjectiveSpec spec;
    spec.box = kSignedBox;
    const auto c = lipschitz_constants(spec);
    REQUIRE(c.kappa2 == 0.0);
    REQUIRE(c.kappa_cut == 0.0);
    REQUIRE(c.m_inf == 0.0);
    REQUIRE(c.sigma == 0.0);
  }

  SECTION("measured L2 ratio of phi stays below the reported kappa2") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.1, 1.0);
    const double kappa2 = lipschitz_constants(spec).kappa2;
    RngStream rs = RngSpec{88}.stream(1);
    for (int rep = 0; rep < 100; ++rep) {
      const int m = 3 + static_cast<int>(rs.uniform01() * 4);
      const StepKernel u = oracle::random_kernel(m, kUnitBox, rs);
      const StepKernel v = oracle::random_kernel(m, kUnitBox, rs);
      const double dist = l2_dist(u, v);
      if (dist < 1e-9) continue;
      const double ratio = l2_dist(phi(u, spec), phi(v, spec)) / dist;
      REQUIRE(ratio <= kappa2);
    }
  }
}
