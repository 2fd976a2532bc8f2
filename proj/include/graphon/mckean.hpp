#pragma once

// The deterministic kernel-valued curve Gamma: per-cell one-dimensional
// reflected diffusions driven by the previous iterate's curve, averaged by
// Monte Carlo, iterated to a fixed point. Brownian increments per
// (cell, replicate, step) are derived from the base seed independently of
// the iteration index, so successive Picard iterates share their noise and
// the contraction is visible above the Monte Carlo floor.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "graphon/cut_norm.hpp"
#include "graphon/objective.hpp"
#include "graphon/parallel.hpp"
#include "graphon/reflect.hpp"
#include "graphon/sgd.hpp"
#include "graphon/step_kernel.hpp"

namespace graphon {

struct GraphonFlow {
  int m = 0;
  Box box{};
  std::vector<double> times;        // increasing, times[0] == 0
  std::vector<StepKernel> kernels;  // one per time

  double horizon() const { return times.back(); }

  // right-continuous index of the slice covering t
  std::size_t index_at(double t) const {
    if (t < 0.0 || t > times.back() + 1e-9) throw OutOfHorizon("GraphonFlow: time out of range");
    std::size_t l = 0;
    while (l + 1 < times.size() && times[l + 1] <= t + 1e-12) ++l;
    return l;
  }

  const StepKernel& at_time(double t) const { return kernels[index_at(t)]; }

  static GraphonFlow constant_flow(const StepKernel& w0, const std::vector<double>& times) {
    GraphonFlow f;
    f.m = w0.resolution();
    f.box = w0.box();
    f.times = times;
    f.kernels.assign(times.size(), w0);
    return f;
  }
};

// --- drift families -------------------------------------------------------------

enum class DriftMode { Gradient, Zero, LinearPull };

// b(z, W)(x, y): Gradient mode is the negated first variation with the
// entropy term evaluated at the particle's own state z; Zero has no drift;
// LinearPull is -pull * z (linear, so ensemble means are exact).
struct DriftSpec {
  DriftMode mode = DriftMode::Zero;
  ObjectiveSpec objective;  // gradient mode only
  double pull = 0.0;        // linear-pull mode only

  static DriftSpec zero() { return DriftSpec{}; }

  static DriftSpec gradient(const ObjectiveSpec& spec) {
    DriftSpec d;
    d.mode = DriftMode::Gradient;
    d.objective = spec;
    return d;
  }

  static DriftSpec linear_pull(double pull) {
    DriftSpec d;
    d.mode = DriftMode::LinearPull;
    d.pull = pull;
    return d;
  }

  // cellwise state-independent part of the drift, for one curve slice
  StepKernel precompute(const StepKernel& w) const {
    const int m = w.resolution();
    StepKernel pre(m, kGradientBox, 0.0);
    if (mode == DriftMode::Gradient) {
      for (const HomTerm& term : objective.terms) {
        const double residual = term.weight * (hom_density(term.graph, w) - term.target);
        const StepKernel hp = hom_phi(term.graph, w);
        for (std::size_t i = 0; i < pre.values().size(); ++i)
          pre.values()[i] += residual * hp.values()[i];
      }
    }
    return pre;
  }

  double eval(double z, const StepKernel& pre, int a, int b) const {
    switch (mode) {
      case DriftMode::Gradient: {
        double v = pre(a, b);
        if (objective.entropy_weight > 0.0) v += objective.entropy_weight * objective.clamped_logit(z);
        return -v;
      }
      case DriftMode::LinearPull:
        return -pull * z;
      case DriftMode::Zero:
      default:
        return 0.0;
    }
  }
};

// --- Picard iteration -------------------------------------------------------------

struct PicardOptions {
  int threads = 1;
};

struct PicardResult {
  GraphonFlow flow;
  double noise_floor = 0.0;  // per-cell standard error at the horizon, averaged over cells
};

namespace detail {

struct InnerGrid {
  std::size_t steps = 0;
  std::vector<std::size_t> slice_of_step;   // flow slice feeding each inner step
  std::vector<std::size_t> output_at_step;  // inner step index of each output time
};

inline InnerGrid build_inner_grid(const std::vector<double>& times, double inner_dt) {
  if (inner_dt <= 0.0) throw DomainError("picard: inner_dt must be positive");
  InnerGrid g;
  g.steps = static_cast<std::size_t>(std::llround(times.back() / inner_dt));
  if (std::abs(static_cast<double>(g.steps) * inner_dt - times.back()) > 1e-9)
    throw DomainError("picard: inner_dt must divide the horizon");
  g.output_at_step.resize(times.size());
  for (std::size_t l = 0; l < times.size(); ++l) {
    const double ratio = times[l] / inner_dt;
    const std::size_t s = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(s)) > 1e-6)
      throw DomainError("picard: inner_dt must divide the flow's time grid");
    g.output_at_step[l] = s;
  }
  g.slice_of_step.resize(g.steps);
  std::size_t slice = 0;
  for (std::size_t s = 0; s < g.steps; ++s) {
    const double t = static_cast<double>(s) * inner_dt;
    while (slice + 1 < times.size() && times[slice + 1] <= t + 1e-12) ++slice;
    g.slice_of_step[s] = slice;
  }
  return g;
}

}  // namespace detail

inline PicardResult picard_iterate(const GraphonFlow& gamma_k, const DriftSpec& drift,
                                   const DiffusionSpec& diff, int mc_reps, double inner_dt,
                                   const RngSpec& rng, const PicardOptions& opts = {}) {
  if (mc_reps < 1) throw DomainError("picard_iterate: mc_reps must be >= 1");
  const int m = gamma_k.m;
  const Box box = gamma_k.box;
  const StepKernel& w0 = gamma_k.kernels.front();
  const auto grid = detail::build_inner_grid(gamma_k.times, inner_dt);
  const double sqrt_dt = std::sqrt(inner_dt);

  // per-slice precomputations of the curve-dependent pieces
  std::vector<StepKernel> pre;
  std::vector<StepKernel> sigma;
  pre.reserve(gamma_k.kernels.size());
  for (const StepKernel& w : gamma_k.kernels) pre.push_back(drift.precompute(w));
  const bool const_sigma = diff.is_constant();
  if (!const_sigma)
    for (const StepKernel& w : gamma_k.kernels) sigma.push_back(diff.eval_kernel(w));

  const std::size_t n_times = gamma_k.times.size();
  const std::size_t n_cells = static_cast<std::size_t>(m) * (m + 1) / 2;
  std::vector<std::vector<double>> cell_mean(n_times, std::vector<double>(n_cells, 0.0));
  std::vector<double> cell_se(n_cells, 0.0);

  parallel_for(n_cells, opts.threads, [&](std::size_t cell) {
    int a = 0;
    std::size_t off = cell;
    while (off >= static_cast<std::size_t>(m - a)) {
      off -= static_cast<std::size_t>(m - a);
      ++a;
    }
    const int b = a + static_cast<int>(off);

    // per-replicate storage, then ordered summation: thread-count invariant
    std::vector<std::vector<double>> snap(n_times, std::vector<double>(mc_reps));
    for (int rep = 0; rep < mc_reps; ++rep) {
      RngStream bm = rng.stream(rng_tag::kCell, cell, static_cast<std::uint64_t>(rep));
      double x = w0(a, b);
      std::size_t out_idx = 0;
      if (grid.output_at_step[0] == 0) snap[out_idx++][static_cast<std::size_t>(rep)] = x;
      for (std::size_t s = 0; s < grid.steps; ++s) {
        const std::size_t slice = grid.slice_of_step[s];
        const double sg = const_sigma ? diff.beta : sigma[slice](a, b);
        const double dy = drift.eval(x, pre[slice], a, b) * inner_dt + sg * sqrt_dt * bm.normal();
        x = skorokhod_step(x, dy, box).x;
        while (out_idx < n_times && grid.output_at_step[out_idx] == s + 1)
          snap[out_idx++][static_cast<std::size_t>(rep)] = x;
      }
    }
    double worst_se = 0.0;
    for (std::size_t l = 0; l < n_times; ++l) {
      double sum = 0.0;
      for (int rep = 0; rep < mc_reps; ++rep) sum += snap[l][static_cast<std::size_t>(rep)];
      const double mean = sum / mc_reps;
      cell_mean[l][cell] = mean;
      if (l + 1 == n_times && mc_reps > 1) {
        double ss = 0.0;
        for (int rep = 0; rep < mc_reps; ++rep) {
          const double d = snap[l][static_cast<std::size_t>(rep)] - mean;
          ss += d * d;
        }
        worst_se = std::sqrt(ss / (mc_reps - 1) / mc_reps);
      }
    }
    cell_se[cell] = worst_se;
  });

  PicardResult out;
  out.flow.m = m;
  out.flow.box = box;
  out.flow.times = gamma_k.times;
  out.flow.kernels.reserve(n_times);
  for (std::size_t l = 0; l < n_times; ++l) {
    StepKernel w(m, box);
    std::size_t cell = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b, ++cell) w.set(a, b, box.clamp(cell_mean[l][cell]));
    out.flow.kernels.push_back(std::move(w));
  }
  double floor = 0.0;
  for (double se : cell_se) floor += se;
  out.noise_floor = n_cells ? floor / static_cast<double>(n_cells) : 0.0;
  return out;
}

// --- fixed-point solver -------------------------------------------------------------

struct SolveGammaOptions {
  double tol = 0.0;  // 0: auto, 2x the estimated noise floor
  int max_iters = 12;
  int threads = 1;
};

struct SolveGammaResult {
  GraphonFlow flow;
  std::vector<double> distances;  // sup-t L2 distance between successive iterates
  double noise_floor = 0.0;
  double tol = 0.0;
  bool converged = false;
};

inline double flow_sup_l2_dist(const GraphonFlow& a, const GraphonFlow& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.kernels.size(); ++l)
    d = std::max(d, l2_dist(a.kernels[l], b.kernels[l]));
  return d;
}

inline SolveGammaResult solve_gamma(const StepKernel& w0_any, const DriftSpec& drift,
                                    const DiffusionSpec& diff, double horizon, int m,
                                    int out_steps, int mc_reps, double inner_dt,
                                    const RngSpec& rng, const SolveGammaOptions& opts = {}) {
  if (out_steps < 1 || opts.max_iters < 1) throw DomainError("solve_gamma: bad plan");
  // project the initial kernel onto the solver grid
  const StepKernel w0 =
      w0_any.resolution() == m ? w0_any : embed_kernel(restrict_matrix(w0_any, m));

  std::vector<double> times(static_cast<std::size_t>(out_steps) + 1);
  for (int l = 0; l <= out_steps; ++l)
    times[static_cast<std::size_t>(l)] = horizon * static_cast<double>(l) / out_steps;

  SolveGammaResult out;
  GraphonFlow current = GraphonFlow::constant_flow(w0, times);

  PicardOptions popts;
  popts.threads = opts.threads;
  for (int it = 0; it < opts.max_iters; ++it) {
    PicardResult next = picard_iterate(current, drift, diff, mc_reps, inner_dt, rng, popts);
    if (it == 0) {
      out.noise_floor = next.noise_floor;
      out.tol = opts.tol > 0.0 ? opts.tol : 2.0 * next.noise_floor;
    }
    out.distances.push_back(flow_sup_l2_dist(next.flow, current));
    current = std::move(next.flow);
    if (out.distances.back() <= out.tol) {
      out.converged = true;
      break;
    }
  }
  out.flow = std::move(current);
  return out;
}

// --- propagation-of-chaos diagnostic -------------------------------------------------

struct ChaosRow {
  int n = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  double se_of_median = 0.0;
  double min_sandwich_margin = 0.0;  // min over snapshots of h_C4(diff) - heur^4
  std::vector<double> sup_dists;
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace detail

// For each n: run the finite system from the projected initial kernel and
// record the sup over the curve's time grid of the heuristic cut norm of
// K(X_n(t)) - Gamma(t) on the common refinement.
inline std::vector<ChaosRow> chaos_diagnostic(const ObjectiveSpec& spec, const DiffusionSpec& diff,
                                              const GraphonFlow& gamma,
                                              const std::vector<int>& n_list, int reps,
                                              const StepSchedule& schedule, const RngSpec& rng,
                                              int threads = 1, int cut_restarts = 6) {
  if (schedule.horizon() + 1e-9 < gamma.horizon())
    throw DomainError("chaos_diagnostic: schedule must cover the curve's horizon");
  const SimpleGraph c4 = make_cycle4_graph();
  std::vector<ChaosRow> rows;
  for (int n : n_list) {
    ChaosRow row;
    row.n = n;
    row.sup_dists.assign(static_cast<std::size_t>(reps), 0.0);
    std::vector<double> margins(static_cast<std::size_t>(reps), 0.0);

    const SymMatrix a0 = restrict_matrix(gamma.kernels.front(), n);

    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
      const RngSpec rrng = rng.derive(rng_tag::kReplicate, static_cast<std::uint64_t>(n), rep);
      const Trajectory traj = reflected_euler(spec, diff, a0, schedule, rrng);
      double sup = 0.0;
      double margin = 1e300;
      for (std::size_t l = 0; l < gamma.times.size(); ++l) {
        const SymMatrix& x = interpolate(traj, gamma.times[l]);
        const StepKernel d = kernel_difference(embed_kernel(x), gamma.kernels[l]);
        const double heur =
            cut_norm_heuristic(d, cut_restarts, rrng.derive(rng_tag::kRestart, l)).value;
        sup = std::max(sup, heur);
        const double hc4 = hom_density(c4, d);
        margin = std::min(margin, hc4 - heur * heur * heur * heur);
      }
      row.sup_dists[rep] = sup;
      margins[rep] = margin;
    });

    row.median = detail::quantile(row.sup_dists, 0.5);
    row.q1 = detail::quantile(row.sup_dists, 0.25);
    row.q3 = detail::quantile(row.sup_dists, 0.75);
    double mean = 0.0, ss = 0.0;
    for (double v : row.sup_dists) mean += v;
    mean /= static_cast<double>(reps);
    for (double v : row.sup_dists) ss += (v - mean) * (v - mean);
    const double sd = reps > 1 ? std::sqrt(ss / (reps - 1)) : 0.0;
    row.se_of_median = 1.2533 * sd / std::sqrt(static_cast<double>(reps));
    row.min_sandwich_margin = *std::min_element(margins.begin(), margins.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- sampled-array convergence check --------------------------------------------------

struct SampledArrayRow {
  int k = 0;
  double mean_abs_dev = 0.0;
};

namespace detail {

// injective homomorphism density: average over the n-falling-k injections
inline double injective_hom_density(const SimpleGraph& f, const SymMatrix& a) {
  const int n = a.size();
  const int v = f.k;
  if (n < v) throw DomainError("injective density needs at least |V(F)| rows");
  std::vector<int> map(static_cast<std::size_t>(v), -1);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  double total = 0.0;
  const auto rec = [&](auto&& self, int depth, double prod) -> void {
    if (depth == v) {
      total += prod;
      return;
    }
    for (int cand = 0; cand < n; ++cand) {
      if (used[static_cast<std::size_t>(cand)]) continue;
      double p = prod;
      for (auto [x, y] : f.edges) {
        if (x == depth && map[static_cast<std::size_t>(y)] >= 0)
          p *= a(cand, map[static_cast<std::size_t>(y)]);
        else if (y == depth && map[static_cast<std::size_t>(x)] >= 0)
          p *= a(map[static_cast<std::size_t>(x)], cand);
      }
      map[static_cast<std::size_t>(depth)] = cand;
      used[static_cast<std::size_t>(cand)] = true;
      self(self, depth + 1, p);
      used[static_cast<std::size_t>(cand)] = false;
      map[static_cast<std::size_t>(depth)] = -1;
    }
  };
  rec(rec, 0, 1.0);
  double falling = 1.0;
  for (int i = 0; i < v; ++i) falling *= static_cast<double>(n - i);
  return total / falling;
}

}  // namespace detail

inline std::vector<SampledArrayRow> sampled_array_check(const StepKernel& w, const SimpleGraph& f,
                                                        const std::vector<int>& k_list, int reps,
                                                        const RngSpec& rng) {
  const double exact = hom_density(f, w);
  std::vector<SampledArrayRow> rows;
  for (int k : k_list) {
    double dev = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto s = sample_matrix(w, k, rng.derive(rng_tag::kSample, k, rep));
      dev += std::abs(detail::injective_hom_density(f, s.matrix) - exact);
    }
    rows.push_back({k, dev / reps});
  }
  return rows;
}

// --- boundary flux ---------------------------------------------------------------------

struct FluxSeries {
  std::vector<double> times;       // interior grid times of the curve
  std::vector<double> dgamma_dt;   // central differences on the curve
  std::vector<double> drift_rate;  // ensemble mean drift (equals -phi(Gamma) in gradient mode)
  std::vector<double> l_plus_rate;
  std::vector<double> l_minus_rate;
  std::vector<double> residual;    // dGamma/dt - drift - L^- rate + L^+ rate
};

// Empirical check of the velocity decomposition for one cell: the curve's
// time derivative equals the mean drift plus the difference of boundary
// local-time rates, all estimated from a fresh Monte Carlo ensemble.
inline FluxSeries boundary_flux(const GraphonFlow& gamma, const DriftSpec& drift,
                                const DiffusionSpec& diff, int cell_a, int cell_b, int mc_reps,
                                double inner_dt, const RngSpec& rng) {
  if (!diff.is_constant() || diff.beta <= 0.0)
    throw DomainError("boundary_flux: requires a constant diffusion beta > 0");
  const Box box = gamma.box;
  const auto grid = detail::build_inner_grid(gamma.times, inner_dt);
  const double sqrt_dt = std::sqrt(inner_dt);

  std::vector<StepKernel> pre;
  pre.reserve(gamma.kernels.size());
  for (const StepKernel& w : gamma.kernels) pre.push_back(drift.precompute(w));

  const std::size_t n_times = gamma.times.size();
  // cumulative ensemble means at the grid times
  std::vector<double> cum_drift(n_times, 0.0), cum_lo(n_times, 0.0), cum_hi(n_times, 0.0);

  const std::size_t cell = static_cast<std::size_t>(
      SymMatrix::pack_index(gamma.m, std::min(cell_a, cell_b), std::max(cell_a, cell_b)));
  for (int rep = 0; rep < mc_reps; ++rep) {
    RngStream bm = rng.stream(rng_tag::kCell, cell, static_cast<std::uint64_t>(rep));
    double x = gamma.kernels.front()(cell_a, cell_b);
    double drift_int = 0.0, lo_int = 0.0, hi_int = 0.0;
    std::size_t out_idx = grid.output_at_step[0] == 0 ? 1 : 0;
    for (std::size_t s = 0; s < grid.steps; ++s) {
      const std::size_t slice = grid.slice_of_step[s];
      const double b = drift.eval(x, pre[slice], cell_a, cell_b);
      const SkorokhodStep st =
          skorokhod_step(x, b * inner_dt + diff.beta * sqrt_dt * bm.normal(), box);
      x = st.x;
      drift_int += b * inner_dt;
      lo_int += st.dl_minus;
      hi_int += st.dl_plus;
      while (out_idx < n_times && grid.output_at_step[out_idx] == s + 1) {
        cum_drift[out_idx] += drift_int;
        cum_lo[out_idx] += lo_int;
        cum_hi[out_idx] += hi_int;
        ++out_idx;
      }
    }
  }
  for (std::size_t l = 0; l < n_times; ++l) {
    cum_drift[l] /= mc_reps;
    cum_lo[l] /= mc_reps;
    cum_hi[l] /= mc_reps;
  }

  FluxSeries out;
  for (std::size_t l = 1; l + 1 < n_times; ++l) {
    const double dt2 = gamma.times[l + 1] - gamma.times[l - 1];
    const double dgdt =
        (gamma.kernels[l + 1](cell_a, cell_b) - gamma.kernels[l - 1](cell_a, cell_b)) / dt2;
    const double drate = (cum_drift[l + 1] - cum_drift[l - 1]) / dt2;
    const double lo_rate = (cum_lo[l + 1] - cum_lo[l - 1]) / dt2;
    const double hi_rate = (cum_hi[l + 1] - cum_hi[l - 1]) / dt2;
    out.times.push_back(gamma.times[l]);
    out.dgamma_dt.push_back(dgdt);
    out.drift_rate.push_back(drate);
    out.l_minus_rate.push_back(lo_rate);
    out.l_plus_rate.push_back(hi_rate);
    out.residual.push_back(dgdt - drate - lo_rate + hi_rate);
  }
  return out;
}

// --- persistence -------------------------------------------------------------------------

// directory layout: manifest.json + kernel_<index>.csv per time
inline void save_flow(const GraphonFlow& flow, const std::string& dir,
                      const nlohmann::ordered_json& solver_info = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["grid"] = flow.m;
  manifest["box"] = {flow.box.lo, flow.box.hi};
  manifest["times"] = flow.times;
  if (!solver_info.is_null()) manifest["solver"] = solver_info;
  std::vector<std::string> files;
  for (std::size_t l = 0; l < flow.kernels.size(); ++l) {
    char name[32];
    std::snprintf(name, sizeof(name), "kernel_%04zu.csv", l);
    files.emplace_back(name);
    write_kernel_csv(flow.kernels[l], (fs::path(dir) / name).string());
  }
  manifest["kernels"] = files;
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw IOError("cannot write manifest in " + dir);
  os << manifest.dump(2) << "\n";
}

inline GraphonFlow load_flow(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw IOError("cannot open manifest in " + dir);
  nlohmann::json manifest;
  is >> manifest;
  GraphonFlow flow;
  flow.m = manifest.at("grid").get<int>();
  flow.box = Box{manifest.at("box")[0].get<double>(), manifest.at("box")[1].get<double>()};
  flow.times = manifest.at("times").get<std::vector<double>>();
  for (const auto& name : manifest.at("kernels")) {
    flow.kernels.push_back(read_kernel_csv((fs::path(dir) / name.get<std::string>()).string()));
    if (flow.kernels.back().resolution() != flow.m) throw IOError("flow kernel grid mismatch");
  }
  if (flow.kernels.size() != flow.times.size()) throw IOError("flow manifest/kernels mismatch");
  return flow;
}

}  // namespace graphon
