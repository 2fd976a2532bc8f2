#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "graphon/mckean.hpp"
#include "graphon/sgd.hpp"
#include "oracles.hpp"

using namespace graphon;

namespace {

std::vector<double> uniform_times(double horizon, int steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int l = 0; l <= steps; ++l) t[static_cast<std::size_t>(l)] = horizon * l / steps;
  return t;
}

StepKernel two_block_kernel(int m, double lo_block, double cross, double hi_block) {
  StepKernel w(m, kUnitBox);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      const bool a_lo = a < m / 2, b_lo = b < m / 2;
      w.set(a, b, a_lo == b_lo ? (a_lo ? lo_block : hi_block) : cross);
    }
  return w;
}

}  // namespace

TEST_CASE("picard_iterate fixed points") {
  SECTION("no drift, no noise: the flow freezes at the initial kernel") {
    const StepKernel w0 = two_block_kernel(4, 0.7, 0.3, 0.55);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.5, 8));
    const PicardResult res =
        picard_iterate(g0, DriftSpec::zero(), DiffusionSpec::constant(0.0), 1, 0.5 / 64, RngSpec{1});
    for (const StepKernel& k : res.flow.kernels) REQUIRE(k == w0);
    // averaging identical paths only moves values by rounding
    const PicardResult res3 =
        picard_iterate(g0, DriftSpec::zero(), DiffusionSpec::constant(0.0), 3, 0.5 / 64, RngSpec{1});
    for (const StepKernel& k : res3.flow.kernels)
      REQUIRE(l2_dist(k, w0) < 1e-15);
  }

  SECTION("driftless noise from the center remains centered within 3 SE") {
    const StepKernel w0(2, kSignedBox, 0.0);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.5, 4));
    const int reps = 2000;
    const PicardResult res = picard_iterate(g0, DriftSpec::zero(), DiffusionSpec::constant(1.0),
                                            reps, 0.5 / 128, RngSpec{2});
    // paths reflect in [-1,1]; sd at t=0.5 is below sqrt(t)
    const double se = std::sqrt(0.5 / reps);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) REQUIRE(std::abs(res.flow.kernels.back()(a, b)) < 3.0 * se);
  }

  SECTION("entropy-only at one half is a fixed point up to Monte Carlo error") {
    const StepKernel w0(3, kUnitBox, 0.5);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.25, 4));
    const DriftSpec drift = DriftSpec::gradient(entropy_only_spec(4.0));
    const PicardResult res =
        picard_iterate(g0, drift, DiffusionSpec::constant(0.1), 1500, 0.25 / 128, RngSpec{3});
    for (const StepKernel& k : res.flow.kernels)
      for (double v : k.values()) REQUIRE(std::abs(v - 0.5) < 0.02);
  }

  SECTION("common random numbers: bitwise reproducible") {
    const StepKernel w0 = two_block_kernel(4, 0.8, 0.2, 0.6);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.25, 4));
    const DriftSpec drift = DriftSpec::gradient(edge_triangle_spec(0.3, 0.1, 4.0));
    const PicardResult a =
        picard_iterate(g0, drift, DiffusionSpec::constant(0.25), 50, 0.25 / 64, RngSpec{4});
    const PicardResult b =
        picard_iterate(g0, drift, DiffusionSpec::constant(0.25), 50, 0.25 / 64, RngSpec{4});
    for (std::size_t l = 0; l < a.flow.kernels.size(); ++l)
      REQUIRE(a.flow.kernels[l] == b.flow.kernels[l]);
  }

  SECTION("thread count does not change the result") {
    const StepKernel w0 = two_block_kernel(4, 0.8, 0.2, 0.6);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.25, 4));
    const DriftSpec drift = DriftSpec::gradient(edge_triangle_spec(0.3, 0.1, 4.0));
    PicardOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const PicardResult a =
        picard_iterate(g0, drift, DiffusionSpec::constant(0.25), 40, 0.25 / 64, RngSpec{5}, one);
    const PicardResult b =
        picard_iterate(g0, drift, DiffusionSpec::constant(0.25), 40, 0.25 / 64, RngSpec{5}, four);
    for (std::size_t l = 0; l < a.flow.kernels.size(); ++l)
      REQUIRE(a.flow.kernels[l] == b.flow.kernels[l]);
  }

  SECTION("iterates stay symmetric and inside the box") {
    const StepKernel w0 = two_block_kernel(6, 0.9, 0.1, 0.8);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.5, 8));
    const DriftSpec drift = DriftSpec::gradient(edge_triangle_spec(0.3, 0.1, 4.0));
    const PicardResult res =
        picard_iterate(g0, drift, DiffusionSpec::constant(0.5), 60, 0.5 / 128, RngSpec{6});
    for (const StepKernel& k : res.flow.kernels)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          REQUIRE(k(a, b) == k(b, a));
          REQUIRE(k(a, b) >= 0.0);
          REQUIRE(k(a, b) <= 1.0);
        }
  }

  SECTION("per-cell variance scales like 1/mcReps") {
    const StepKernel w0(2, kSignedBox, 0.0);
    const GraphonFlow g0 = GraphonFlow::constant_flow(w0, uniform_times(0.25, 2));
    const int n_seeds = 24;
    std::vector<double> var;
    for (int mc : {100, 200, 400}) {
      double mean = 0.0, ss = 0.0;
      std::vector<double> vals;
      for (int s = 0; s < n_seeds; ++s) {
        const PicardResult res =
            picard_iterate(g0, DriftSpec::zero(), DiffusionSpec::constant(0.8), mc, 0.25 / 64,
                           RngSpec{700}.derive(s));
        vals.push_back(res.flow.kernels.back()(0, 1));
      }
      for (double v : vals) mean += v;
      mean /= n_seeds;
      for (double v : vals) ss += (v - mean) * (v - mean);
      var.push_back(ss / (n_seeds - 1));
    }
    const double slope = std::log(var[0] / var[2]) / std::log(4.0);
    REQUIRE(slope > 0.8);
    REQUIRE(slope < 1.2);
  }
}

TEST_CASE("solve_gamma") {
  SECTION("entropy-only fixed point converges in one iteration") {
    const StepKernel w0(3, kUnitBox, 0.5);
    const DriftSpec drift = DriftSpec::gradient(entropy_only_spec(1.0));
    const SolveGammaResult res = solve_gamma(w0, drift, DiffusionSpec::constant(0.0), 0.5, 3, 8,
                                             1, 0.5 / 64, RngSpec{7});
    REQUIRE(res.converged);
    REQUIRE(res.distances.size() == 1);
    REQUIRE(res.distances[0] <= res.tol);
  }

  SECTION("zero-noise gamma matches the matrix gradient flow, O(inner_dt)") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.027, 4.0);
    const DriftSpec drift = DriftSpec::gradient(spec);
    const StepKernel w0 = two_block_kernel(8, 0.7, 0.3, 0.55);
    const double horizon = 0.5;
    SolveGammaOptions opts;
    opts.max_iters = 12;
    opts.tol = 1e-7;

    const auto gamma_vs_flow_gap = [&](int out_steps, double inner_dt) {
      const SolveGammaResult res = solve_gamma(w0, drift, DiffusionSpec::constant(0.0), horizon,
                                               8, out_steps, 1, inner_dt, RngSpec{8}, opts);
      const FlowResult flow = zero_noise_flow(spec, restrict_matrix(w0, 8), inner_dt, horizon);
      double err = 0.0;
      for (std::size_t l = 0; l < res.flow.times.size(); ++l) {
        const SymMatrix& x = interpolate(flow.trajectory, res.flow.times[l]);
        err = std::max(err, l2_dist(embed_kernel(x), res.flow.kernels[l]));
      }
      return err;
    };

    // matched grids: same explicit scheme, agreement to the fixed-point tol
    REQUIRE(gamma_vs_flow_gap(64, horizon / 64) < 1e-6);
    // curve held piecewise constant on coarser output windows: the gap is
    // first order in the window and halves when the window halves
    const double coarse = gamma_vs_flow_gap(8, horizon / 256);
    const double fine = gamma_vs_flow_gap(16, horizon / 256);
    REQUIRE(coarse < 0.05);
    REQUIRE(fine < 0.75 * coarse);
  }

  SECTION("distances contract under common random numbers") {
    const DriftSpec drift = DriftSpec::gradient(edge_triangle_spec(0.3, 0.027, 4.0));
    const StepKernel w0 = two_block_kernel(8, 0.7, 0.3, 0.55);
    SolveGammaOptions opts;
    opts.max_iters = 8;
    const SolveGammaResult res = solve_gamma(w0, drift, DiffusionSpec::constant(0.25), 0.5, 8, 16,
                                             400, 0.5 / 256, RngSpec{9}, opts);
    REQUIRE(res.converged);
    REQUIRE(res.distances.size() >= 2);
    for (std::size_t k = 1; k + 1 < res.distances.size(); ++k)
      REQUIRE(res.distances[k] < res.distances[k - 1]);
  }
}

TEST_CASE("chaos_diagnostic") {
  SECTION("grid-aligned start has zero distance at t = 0") {
    const DriftSpec drift = DriftSpec::gradient(edge_triangle_spec(0.3, 0.1, 4.0));
    const StepKernel w0 = two_block_kernel(4, 0.7, 0.3, 0.55);
    SolveGammaOptions opts;
    opts.max_iters = 3;
    opts.tol = 1e-3;
    const SolveGammaResult g = solve_gamma(w0, drift, DiffusionSpec::constant(0.0), 0.25, 4, 4, 1,
                                           0.25 / 32, RngSpec{10}, opts);
    // n equal to the grid, no noise: trajectory starts exactly on the curve
    const SymMatrix a0 = restrict_matrix(g.flow.kernels.front(), 4);
    const StepKernel d = kernel_difference(embed_kernel(a0), g.flow.kernels.front());
    REQUIRE(cut_norm_heuristic(d, 4, RngSpec{11}).value == 0.0);
  }

  SECTION("deterministic dynamics: distances shrink as n matches the curve") {
    const ObjectiveSpec spec = edge_triangle_spec(0.3, 0.027, 4.0);
    const DriftSpec drift = DriftSpec::gradient(spec);
    // graded kernel: not representable below the full grid, so coarse n pay
    // a genuine restriction error
    StepKernel w0(8, kUnitBox);
    for (int a = 0; a < 8; ++a)
      for (int b = a; b < 8; ++b) w0.set(a, b, 0.2 + 0.6 * (a + b) / 14.0);
    SolveGammaOptions opts;
    opts.max_iters = 10;
    opts.tol = 1e-6;
    const SolveGammaResult g = solve_gamma(w0, drift, DiffusionSpec::constant(0.0), 0.25, 8, 32,
                                           1, 0.25 / 128, RngSpec{12}, opts);
    const auto rows = chaos_diagnostic(spec, DiffusionSpec::constant(0.0), g.flow, {2, 4, 8}, 1,
                                       StepSchedule::constant(0.25 / 128, 128), RngSpec{13});
    REQUIRE(rows[1].median < rows[0].median);
    REQUIRE(rows[2].median < rows[1].median);
    REQUIRE(rows[2].median < 5e-3);  // n = grid: only time-discretization remains
    for (const auto& row : rows) REQUIRE(row.min_sandwich_margin >= -1e-12);
  }
}

TEST_CASE("sampled_array_check") {
  SECTION("constant kernel: sampled density sits exactly at p^|E|") {
    const StepKernel w(4, kUnitBox, 0.6);
    const auto rows = sampled_array_check(w, make_triangle_graph(), {4, 16, 64}, 8, RngSpec{14});
    for (const auto& row : rows) REQUIRE(row.mean_abs_dev < 1e-12);
  }

  SECTION("two-block kernel: deviation shrinks like the sample size suggests") {
    const StepKernel w = two_block_kernel(4, 0.8, 0.2, 0.7);
    const auto rows =
        sampled_array_check(w, make_triangle_graph(), {8, 16, 32, 64}, 60, RngSpec{14});
    for (std::size_t i = 1; i < rows.size(); ++i)
      REQUIRE(rows[i].mean_abs_dev < 1.1 * rows[i - 1].mean_abs_dev);
    // roughly k^{-1/2}: the overall drop over 8x in k is decisive
    REQUIRE(rows[3].mean_abs_dev < 0.5 * rows[0].mean_abs_dev);
  }

  SECTION("k = 2 single edge is the raw sample") {
    RngStream rs = RngSpec{15}.stream(1);
    const StepKernel w = oracle::random_kernel(5, kUnitBox, rs);
    const auto rows = sampled_array_check(w, make_edge_graph(), {2}, 1, RngSpec{16});
    const auto s = sample_matrix(w, 2, RngSpec{16}.derive(rng_tag::kSample, 2, 0));
    REQUIRE_THAT(rows[0].mean_abs_dev,
                 Catch::Matchers::WithinAbs(std::abs(s.matrix(0, 1) - mean_value(w)), 1e-15));
  }
}

TEST_CASE("boundary_flux") {
  SECTION("no drift from the center: all series vanish within tolerance") {
    const StepKernel w0(2, kSignedBox, 0.0);
    SolveGammaOptions opts;
    opts.max_iters = 2;
    const SolveGammaResult g = solve_gamma(w0, DriftSpec::zero(), DiffusionSpec::constant(1.0),
                                           1.0, 2, 8, 4000, 1.0 / 256, RngSpec{17}, opts);
    const FluxSeries flux = boundary_flux(g.flow, DriftSpec::zero(), DiffusionSpec::constant(1.0),
                                          0, 1, 4000, 1.0 / 256, RngSpec{18});
    for (std::size_t l = 0; l < flux.times.size(); ++l) {
      REQUIRE(flux.drift_rate[l] == 0.0);
      REQUIRE(std::abs(flux.residual[l]) < 0.05);
    }
  }

  SECTION("interior linear pull: no local time, velocity equals the drift") {
    // pull to zero with small noise: paths never reach the walls
    const StepKernel w0(2, kSignedBox, 0.5);
    const DriftSpec drift = DriftSpec::linear_pull(4.0);
    SolveGammaOptions opts;
    opts.max_iters = 8;
    const SolveGammaResult g = solve_gamma(w0, drift, DiffusionSpec::constant(0.2), 1.0, 2, 16,
                                           4000, 1.0 / 512, RngSpec{19}, opts);
    const FluxSeries flux = boundary_flux(g.flow, drift, DiffusionSpec::constant(0.2), 0, 1, 4000,
                                          1.0 / 512, RngSpec{20});
    for (std::size_t l = 0; l < flux.times.size(); ++l) {
      REQUIRE(flux.l_plus_rate[l] == 0.0);
      REQUIRE(flux.l_minus_rate[l] == 0.0);
      REQUIRE(std::abs(flux.residual[l]) < 0.08);
    }
  }

  SECTION("start at the upper wall: reflection pushes the mean down") {
    const StepKernel w0(2, kSignedBox, 0.95);
    SolveGammaOptions opts;
    opts.max_iters = 2;
    const SolveGammaResult g = solve_gamma(w0, DriftSpec::zero(), DiffusionSpec::constant(1.0),
                                           0.5, 2, 8, 6000, 0.5 / 256, RngSpec{21}, opts);
    const FluxSeries flux = boundary_flux(g.flow, DriftSpec::zero(), DiffusionSpec::constant(1.0),
                                          0, 1, 6000, 0.5 / 256, RngSpec{22});
    REQUIRE(flux.l_plus_rate.front() > 0.0);
    REQUIRE(flux.dgamma_dt.front() < 0.0);
    for (std::size_t l = 0; l < flux.times.size(); ++l)
      REQUIRE(std::abs(flux.residual[l]) < 0.08);
  }
}

TEST_CASE("flow persistence") {
  namespace fs = std::filesystem;
  const StepKernel w0 = two_block_kernel(4, 0.7, 0.3, 0.55);
  GraphonFlow flow = GraphonFlow::constant_flow(w0, uniform_times(1.0, 3));
  flow.kernels[2].set(0, 1, 0.42);

  const fs::path dir = fs::temp_directory_path() / "graphon_test_flow";
  fs::remove_all(dir);
  nlohmann::ordered_json info;
  info["mc_reps"] = 100;
  save_flow(flow, dir.string(), info);
  const GraphonFlow back = load_flow(dir.string());
  REQUIRE(back.m == flow.m);
  REQUIRE(back.times == flow.times);
  for (std::size_t l = 0; l < flow.kernels.size(); ++l) REQUIRE(back.kernels[l] == flow.kernels[l]);
  fs::remove_all(dir);

  REQUIRE(flow.at_time(0.0) == flow.kernels[0]);
  REQUIRE(flow.at_time(0.5) == flow.kernels[1]);  // right continuous at 1/3, 2/3 grid
  REQUIRE(flow.at_time(1.0) == flow.kernels[3]);
  REQUIRE_THROWS_AS(flow.at_time(1.5), OutOfHorizon);
}
