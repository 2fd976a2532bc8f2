#pragma once

// The discrete algorithms: projected gradient descent, projected noisy SGD,
// the shared-Brownian-path coupling against the reflected SDE, the active
// set, and the zero-noise gradient flow with local-time accounting.
//
// All updates act coordinatewise at the phi scale: the n^2 in front of
// grad R_n cancels the n^-2 in the gradient, so a step reads
// x <- P(x - tau * phi(K(X))(i,j) + noise).

#include <cmath>
#include <functional>
#include <vector>

#include "graphon/objective.hpp"
#include "graphon/parallel.hpp"
#include "graphon/reflect.hpp"

namespace graphon {

inline Trajectory pgd_run(const ObjectiveSpec& spec, const SymMatrix& a0,
                          const StepSchedule& schedule) {
  spec.validate();
  const int n = a0.size();
  const Box box = a0.box();
  Trajectory traj;
  traj.kind = TrajectoryKind::Pgd;
  traj.schedule = schedule;
  traj.states.push_back(a0);
  SymMatrix x = a0;
  for (std::size_t k = 0; k < schedule.steps(); ++k) {
    const double tau = schedule.taus[k];
    const SymMatrix drift = phi_matrix(x, spec);
    SymMatrix next = x;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double dy = -tau * drift(i, j);
        next.set_unchecked(i, j, box.clamp(x(i, j) + dy));
      }
    x = next;
    traj.states.push_back(x);
  }
  return traj;
}

struct PnsgdOptions {
  bool exact_gradient = false;  // replace g_n by the exact gradient
  int threads = 1;
  std::function<double(int, int, std::size_t)> noise_override;
  std::function<XiSample(std::size_t)> xi_override;
};

inline Trajectory pnsgd_run(const ObjectiveSpec& spec, const DiffusionSpec& diff,
                            const SymMatrix& a0, const StepSchedule& schedule, const RngSpec& rng,
                            const PnsgdOptions& opts = {}) {
  spec.validate();
  const int n = a0.size();
  const Box box = a0.box();
  const bool noisy = !diff.is_zero();

  Trajectory traj;
  traj.kind = TrajectoryKind::Pnsgd;
  traj.schedule = schedule;
  traj.states.push_back(a0);
  SymMatrix x = a0;
  for (std::size_t k = 0; k < schedule.steps(); ++k) {
    const double tau = schedule.taus[k];
    const double sqrt_tau = std::sqrt(tau);

    SymMatrix g(n, kGradientBox, 0.0);
    if (opts.exact_gradient) {
      g = phi_matrix(x, spec);
    } else {
      XiSample xi;
      if (opts.xi_override) {
        xi = opts.xi_override(k);
      } else {
        RngStream xs = rng.stream(rng_tag::kXi, static_cast<std::uint64_t>(k));
        xi = draw_xi(n, xs);
      }
      g = stochastic_phi_sample(x, spec, xi);
    }
    const SymMatrix sigma = noisy ? diff.eval_matrix(x) : SymMatrix(n, Box{-1.0, 1.0}, 0.0);

    SymMatrix next = x;
    const std::size_t pairs = static_cast<std::size_t>(n) * (n + 1) / 2;
    parallel_for(pairs, opts.threads, [&](std::size_t p) {
      int i = 0;
      std::size_t offset = p;
      while (offset >= static_cast<std::size_t>(n - i)) {
        offset -= static_cast<std::size_t>(n - i);
        ++i;
      }
      const int j = i + static_cast<int>(offset);
      double dy = -tau * g(i, j);
      if (noisy) {
        const double z = opts.noise_override ? opts.noise_override(i, j, k)
                                             : coordinate_normal(rng, i, j, k);
        dy += sigma(i, j) * sqrt_tau * z;
      }
      next.set_unchecked(i, j, box.clamp(x(i, j) + dy));
    });
    x = next;
    traj.states.push_back(x);
  }
  return traj;
}

// --- coupled PNSGD / RSDE run --------------------------------------------------

// Per-coordinate Brownian increments on a base grid, derived sequentially
// from (seed, i, j). Runs with different step sizes but the same base grid
// see exact restrictions of one path family.
class BrownianGrid {
 public:
  BrownianGrid(int n, double base_dt, std::size_t base_steps, const RngSpec& rng)
      : n_(n), base_dt_(base_dt), sqrt_dt_(std::sqrt(base_dt)) {
    incr_.resize(static_cast<std::size_t>(n) * (n + 1) / 2);
    std::size_t p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j, ++p) {
        RngStream s = rng.stream(rng_tag::kBrownian, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(j));
        incr_[p].resize(base_steps);
        for (std::size_t k = 0; k < base_steps; ++k) incr_[p][k] = sqrt_dt_ * s.normal();
      }
  }

  double base_dt() const { return base_dt_; }

  // increment of B(i,j) over base steps [a, b)
  double increment(int i, int j, std::size_t a, std::size_t b) const {
    const std::size_t p = static_cast<std::size_t>(SymMatrix::pack_index(n_, i, j));
    double s = 0.0;
    for (std::size_t k = a; k < b; ++k) s += incr_[p][k];
    return s;
  }

 private:
  int n_;
  double base_dt_;
  double sqrt_dt_;
  std::vector<std::vector<double>> incr_;
};

struct CoupledOptions {
  double base_dt = 0.0;         // 0: use tau / fine_factor
  bool exact_gradient = false;  // drop the stochastic-gradient noise
  int threads = 1;
};

struct CoupledResult {
  Trajectory pnsgd;                  // coarse grid
  Trajectory rsde;                   // fine grid
  std::vector<double> sup_err_series;  // ||W(t) - X(t)||_F^2 / n^2 at fine times
  double sup_err = 0.0;
};

inline CoupledResult coupled_run(const ObjectiveSpec& spec, const DiffusionSpec& diff,
                                 const SymMatrix& a0, double tau, int coarse_steps,
                                 int fine_factor, const RngSpec& rng,
                                 const CoupledOptions& opts = {}) {
  spec.validate();
  if (fine_factor < 1) throw DomainError("coupled_run: fine_factor must be >= 1");
  if (tau <= 0.0 || coarse_steps < 0) throw DomainError("coupled_run: bad schedule");
  const int n = a0.size();
  const Box box = a0.box();
  const double fine_dt = tau / fine_factor;
  const double base_dt = opts.base_dt > 0.0 ? opts.base_dt : fine_dt;
  const double ratio = fine_dt / base_dt;
  const std::size_t per_fine = static_cast<std::size_t>(std::llround(ratio));
  if (per_fine < 1 || std::abs(ratio - static_cast<double>(per_fine)) > 1e-9)
    throw DomainError("coupled_run: base_dt must divide tau / fine_factor");

  const std::size_t fine_steps = static_cast<std::size_t>(coarse_steps) * fine_factor;
  const BrownianGrid grid(n, base_dt, fine_steps * per_fine, rng);

  // PNSGD on the coarse grid; sqrt(tau) * Ztilde is exactly the coarse
  // Brownian increment by the coupling definition
  Trajectory pnsgd;
  pnsgd.kind = TrajectoryKind::Pnsgd;
  pnsgd.schedule = StepSchedule::constant(tau, coarse_steps);
  pnsgd.states.push_back(a0);
  {
    SymMatrix w = a0;
    for (int k = 0; k < coarse_steps; ++k) {
      SymMatrix g(n, kGradientBox, 0.0);
      if (opts.exact_gradient) {
        g = phi_matrix(w, spec);
      } else {
        RngStream xs = rng.stream(rng_tag::kXi, static_cast<std::uint64_t>(k));
        g = stochastic_phi_sample(w, spec, draw_xi(n, xs));
      }
      const SymMatrix sigma = diff.eval_matrix(w);
      SymMatrix next = w;
      const std::size_t lo = static_cast<std::size_t>(k) * fine_factor * per_fine;
      const std::size_t hi = lo + static_cast<std::size_t>(fine_factor) * per_fine;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double dy = -tau * g(i, j) + sigma(i, j) * grid.increment(i, j, lo, hi);
          next.set_unchecked(i, j, box.clamp(w(i, j) + dy));
        }
      w = next;
      pnsgd.states.push_back(w);
    }
  }

  // reflected Euler on the fine grid from the same path
  Trajectory rsde;
  rsde.kind = TrajectoryKind::Rsde;
  rsde.schedule = StepSchedule::constant(fine_dt, static_cast<int>(fine_steps));
  rsde.states.push_back(a0);
  {
    SymMatrix x = a0;
    for (std::size_t k = 0; k < fine_steps; ++k) {
      const SymMatrix drift = phi_matrix(x, spec);
      const SymMatrix sigma = diff.eval_matrix(x);
      SymMatrix next = x;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double dy = -fine_dt * drift(i, j) +
                            sigma(i, j) * grid.increment(i, j, k * per_fine, (k + 1) * per_fine);
          next.set_unchecked(i, j, box.clamp(x(i, j) + dy));
        }
      x = next;
      rsde.states.push_back(x);
    }
  }

  CoupledResult out;
  out.sup_err_series.reserve(fine_steps + 1);
  for (std::size_t f = 0; f <= fine_steps; ++f) {
    const SymMatrix& x = rsde.states[f];
    const SymMatrix& w = pnsgd.states[std::min<std::size_t>(f / fine_factor,
                                                            pnsgd.states.size() - 1)];
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = w(i, j) - x(i, j);
        err += d * d;
      }
    out.sup_err_series.push_back(err / (static_cast<double>(n) * n));
    out.sup_err = std::max(out.sup_err, out.sup_err_series.back());
  }
  out.pnsgd = std::move(pnsgd);
  out.rsde = std::move(rsde);
  return out;
}

struct CouplingTrendRow {
  double tau = 0.0;
  double mean_sup_err = 0.0;
  double se = 0.0;
  std::vector<double> replicate_errs;
};

// one shared Brownian family per replicate across all step sizes
inline std::vector<CouplingTrendRow> coupling_trend(const ObjectiveSpec& spec,
                                                    const DiffusionSpec& diff,
                                                    const SymMatrix& a0, double horizon,
                                                    const std::vector<double>& taus,
                                                    int fine_factor, int replicates,
                                                    const RngSpec& rng, int threads = 1) {
  if (taus.empty() || replicates < 1) throw DomainError("coupling_trend: empty plan");
  double base_dt = taus[0] / fine_factor;
  for (double t : taus) base_dt = std::min(base_dt, t / fine_factor);

  std::vector<CouplingTrendRow> rows(taus.size());
  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    rows[ti].tau = taus[ti];
    rows[ti].replicate_errs.assign(static_cast<std::size_t>(replicates), 0.0);
  }
  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    const double tau = taus[ti];
    const int steps = static_cast<int>(std::llround(horizon / tau));
    if (std::abs(steps * tau - horizon) > 1e-9)
      throw DomainError("coupling_trend: tau must divide the horizon");
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
      const RngSpec rep = rng.derive(rng_tag::kReplicate, r);
      CoupledOptions opts;
      opts.base_dt = base_dt;
      const CoupledResult res = coupled_run(spec, diff, a0, tau, steps, fine_factor, rep, opts);
      rows[ti].replicate_errs[r] = res.sup_err;
    });
  }
  for (auto& row : rows) {
    double sum = 0.0, sumsq = 0.0;
    for (double v : row.replicate_errs) {
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / replicates;
    row.mean_sup_err = mean;
    row.se = replicates > 1
                 ? std::sqrt(std::max(0.0, sumsq / replicates - mean * mean) / (replicates - 1))
                 : 0.0;
  }
  return rows;
}

// --- active set and the zero-noise flow -----------------------------------------

inline constexpr double kBoundaryTol = 1e-12;

// free coordinates: interior, or at a face with the gradient pointing inward
inline std::vector<bool> active_set(const SymMatrix& a, const ObjectiveSpec& spec) {
  const SymMatrix grad = phi_matrix(a, spec);  // sign agrees with grad R_n
  const Box box = a.box();
  std::vector<bool> mask(static_cast<std::size_t>(a.pair_count()), false);
  std::size_t p = 0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = i; j < a.size(); ++j, ++p) {
      const double v = a(i, j);
      if (v < box.hi - kBoundaryTol && v > box.lo + kBoundaryTol)
        mask[p] = true;
      else if (v >= box.hi - kBoundaryTol && grad(i, j) > 0.0)
        mask[p] = true;
      else if (v <= box.lo + kBoundaryTol && grad(i, j) < 0.0)
        mask[p] = true;
    }
  return mask;
}

struct FlowResult {
  Trajectory trajectory;  // kind Flow, with cumulative local times recorded
  std::vector<double> objective_values;
};

// explicit Euler on dX = -phi(K(X)) o 1_{active} dt with clamping; local
// times accumulate the suppressed outward gradient at pinned coordinates
inline FlowResult zero_noise_flow(const ObjectiveSpec& spec, const SymMatrix& a0, double dt,
                                  double horizon, bool record_objective = false) {
  spec.validate();
  if (dt <= 0.0) throw DomainError("zero_noise_flow: dt must be positive");
  const int steps = static_cast<int>(std::llround(horizon / dt));
  if (std::abs(steps * dt - horizon) > 1e-6)
    throw DomainError("zero_noise_flow: dt must divide the horizon");
  const int n = a0.size();
  const Box box = a0.box();

  FlowResult out;
  Trajectory& traj = out.trajectory;
  traj.kind = TrajectoryKind::Flow;
  traj.schedule = StepSchedule::constant(dt, steps);
  traj.states.push_back(a0);
  traj.l_lower.emplace_back(n, kGradientBox, 0.0);
  traj.l_upper.emplace_back(n, kGradientBox, 0.0);
  if (record_objective) out.objective_values.push_back(eval_rn(a0, spec));

  SymMatrix x = a0;
  for (int k = 0; k < steps; ++k) {
    const SymMatrix drift = phi_matrix(x, spec);
    SymMatrix next = x;
    SymMatrix cum_lo = traj.l_lower.back();
    SymMatrix cum_hi = traj.l_upper.back();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = x(i, j);
        const double d = drift(i, j);
        const bool at_hi = v >= box.hi - kBoundaryTol;
        const bool at_lo = v <= box.lo + kBoundaryTol;
        const bool free = (!at_hi && !at_lo) || (at_hi && d > 0.0) || (at_lo && d < 0.0);
        next.set_unchecked(i, j, free ? box.clamp(v + (-dt * d)) : v);
        if (at_hi && d < 0.0) cum_hi.set_unchecked(i, j, cum_hi(i, j) - dt * d);
        if (at_lo && d > 0.0) cum_lo.set_unchecked(i, j, cum_lo(i, j) + dt * d);
      }
    x = next;
    traj.states.push_back(x);
    traj.l_lower.push_back(std::move(cum_lo));
    traj.l_upper.push_back(std::move(cum_hi));
    if (record_objective) out.objective_values.push_back(eval_rn(x, spec));
  }
  return out;
}

}  // namespace graphon
