#pragma once

// Two-sided Skorokhod machinery on an interval and the projected-Euler
// integrator for the matrix-valued reflected SDE
//
//   dX(i,j) = -phi(K(X))(i,j) dt + Sigma(X)(i,j) dB(i,j) + dL^-(i,j) - dL^+(i,j).
//
// Discretization is clamp-after-full-increment; local-time increments are
// the clamp overflows. Gaussian variates come from per-coordinate derived
// streams keyed by (seed, i, j, step), so trajectories do not depend on
// thread count or update order.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "graphon/errors.hpp"
#include "graphon/objective.hpp"
#include "graphon/parallel.hpp"
#include "graphon/rng.hpp"
#include "graphon/step_kernel.hpp"
#include "graphon/sym_matrix.hpp"

namespace graphon {

inline double clamp_to_box(double x, const Box& box) { return box.clamp(x); }

struct SkorokhodStep {
  double x = 0.0;        // reflected position
  double dl_minus = 0.0; // lower-barrier push
  double dl_plus = 0.0;  // upper-barrier push
};

inline SkorokhodStep skorokhod_step(double x, double dy, const Box& box) {
  const double y = x + dy;
  SkorokhodStep out;
  out.dl_minus = std::max(box.lo - y, 0.0);
  out.dl_plus = std::max(y - box.hi, 0.0);
  out.x = box.clamp(y);
  return out;
}

struct SkorokhodTriple {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> l_lower;
  std::vector<double> l_upper;
};

// exact two-sided solution at grid times for piecewise-constant-increment
// drivers; applies skorokhod_step to the increments of y sequentially
inline SkorokhodTriple skorokhod_map(const std::vector<double>& times,
                                     const std::vector<double>& y, const Box& box) {
  if (times.size() != y.size() || y.empty())
    throw DomainError("skorokhod_map: times and driver must align and be nonempty");
  if (!box.contains(y.front()))
    throw StartOutsideBox("skorokhod_map: driver must start inside the box");
  SkorokhodTriple out;
  out.times = times;
  out.x.resize(y.size());
  out.l_lower.assign(y.size(), 0.0);
  out.l_upper.assign(y.size(), 0.0);
  out.x[0] = y[0];
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    const SkorokhodStep s = skorokhod_step(out.x[k], y[k + 1] - y[k], box);
    out.x[k + 1] = s.x;
    out.l_lower[k + 1] = out.l_lower[k] + s.dl_minus;
    out.l_upper[k + 1] = out.l_upper[k] + s.dl_plus;
  }
  return out;
}

inline const Box kUnboundedBox{-std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()};

// --- schedules and trajectories ----------------------------------------------

struct StepSchedule {
  std::vector<double> taus;
  std::vector<double> times;  // cumulative, times[0] = 0, size = taus.size() + 1

  static StepSchedule constant(double tau, int steps) {
    if (tau <= 0.0 || steps < 0) throw DomainError("StepSchedule: need tau > 0, steps >= 0");
    StepSchedule s;
    s.taus.assign(static_cast<std::size_t>(steps), tau);
    s.rebuild_times();
    return s;
  }

  static StepSchedule geometric(double tau0, double ratio, int steps) {
    if (tau0 <= 0.0 || ratio <= 0.0) throw DomainError("StepSchedule: need positive tau0, ratio");
    StepSchedule s;
    double t = tau0;
    for (int k = 0; k < steps; ++k) {
      s.taus.push_back(t);
      t *= ratio;
    }
    s.rebuild_times();
    return s;
  }

  void rebuild_times() {
    times.assign(1, 0.0);
    for (double t : taus) times.push_back(times.back() + t);
  }

  double horizon() const { return times.back(); }
  std::size_t steps() const { return taus.size(); }
};

enum class TrajectoryKind { Pgd, Pnsgd, Rsde, Flow };

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::Pgd;
  StepSchedule schedule;
  std::vector<SymMatrix> states;          // one per grid time
  std::vector<SymMatrix> l_lower, l_upper; // cumulative local times, if recorded

  bool has_local_times() const { return !l_lower.empty(); }
};

// right-continuous interpolation: the state at the largest grid time <= t
inline const SymMatrix& interpolate(const Trajectory& traj, double t) {
  const auto& times = traj.schedule.times;
  if (t < 0.0 || t > times.back() + 1e-12)
    throw OutOfHorizon("interpolate: time outside [0, horizon]");
  std::size_t k = 0;
  while (k + 1 < times.size() && times[k + 1] <= t) ++k;
  return traj.states[k];
}

// --- diffusion coefficient ----------------------------------------------------

// Sigma maps kernels to nonnegative kernels; its matrix restriction acts
// entrywise on the embedded state. Constant mode returns beta everywhere.
struct DiffusionSpec {
  double beta = 0.0;
  double m_inf = 0.0;  // sup bound; equals beta in constant mode
  std::function<StepKernel(const StepKernel&)> map;  // empty -> constant mode

  static DiffusionSpec constant(double beta) {
    if (beta < 0.0) throw DomainError("DiffusionSpec: beta must be >= 0");
    DiffusionSpec d;
    d.beta = beta;
    d.m_inf = beta;
    return d;
  }

  static DiffusionSpec state_dependent(std::function<StepKernel(const StepKernel&)> map,
                                       double m_inf) {
    if (!map || m_inf < 0.0) throw DomainError("DiffusionSpec: need a map and m_inf >= 0");
    DiffusionSpec d;
    d.map = std::move(map);
    d.m_inf = m_inf;
    return d;
  }

  bool is_constant() const { return !map; }
  bool is_zero() const { return is_constant() && beta == 0.0; }

  SymMatrix eval_matrix(const SymMatrix& a) const {
    if (is_constant()) return SymMatrix(a.size(), Box{-1.0, std::max(1.0, beta + 1.0)}, beta);
    return restrict_matrix(eval_kernel(embed_kernel(a)), a.size());
  }

  // coefficients must land in [0, m_inf]
  StepKernel eval_kernel(const StepKernel& w) const {
    if (is_constant()) return StepKernel(w.resolution(), Box{-1.0, std::max(1.0, beta + 1.0)}, beta);
    StepKernel out = map(w);
    for (double v : out.values())
      if (v < 0.0 || v > m_inf)
        throw DomainError("DiffusionSpec: coefficient outside [0, m_inf]");
    return out;
  }
};

// --- reflected Euler -----------------------------------------------------------

struct EulerOptions {
  bool record_local_times = false;
  int threads = 1;
  // test hook: remap of the per-coordinate noise streams; arguments (i, j, step)
  std::function<double(int, int, std::size_t)> noise_override;
};

inline double coordinate_normal(const RngSpec& rng, int i, int j, std::size_t step) {
  RngStream s = rng.stream(rng_tag::kNoise, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(step));
  return s.normal();
}

inline Trajectory reflected_euler(const ObjectiveSpec& spec, const DiffusionSpec& diff,
                                  const SymMatrix& a0, const StepSchedule& schedule,
                                  const RngSpec& rng, const EulerOptions& opts = {}) {
  spec.validate();
  const int n = a0.size();
  const Box box = a0.box();
  if (spec.entropy_weight > 0.0 && (box.lo < 0.0 || box.hi > 1.0))
    throw DomainError("reflected_euler: entropy objective requires a box inside [0,1]");

  Trajectory traj;
  traj.kind = TrajectoryKind::Rsde;
  traj.schedule = schedule;
  traj.states.reserve(schedule.steps() + 1);
  traj.states.push_back(a0);
  if (opts.record_local_times) {
    traj.l_lower.emplace_back(n, kGradientBox, 0.0);
    traj.l_upper.emplace_back(n, kGradientBox, 0.0);
  }

  const bool noisy = !diff.is_zero();
  SymMatrix x = a0;
  for (std::size_t k = 0; k < schedule.steps(); ++k) {
    const double tau = schedule.taus[k];
    const double sqrt_tau = std::sqrt(tau);
    const SymMatrix drift = phi_matrix(x, spec);  // one shared evaluation per step
    const SymMatrix sigma =
        noisy ? diff.eval_matrix(x) : SymMatrix(n, Box{-1.0, 1.0}, 0.0);

    SymMatrix next = x;
    SymMatrix dl_lo = opts.record_local_times ? SymMatrix(n, kGradientBox, 0.0) : SymMatrix();
    SymMatrix dl_hi = opts.record_local_times ? SymMatrix(n, kGradientBox, 0.0) : SymMatrix();

    const std::size_t pairs = static_cast<std::size_t>(n) * (n + 1) / 2;
    parallel_for(pairs, opts.threads, [&](std::size_t p) {
      // unrank the packed upper-triangle index
      int i = 0;
      std::size_t offset = p;
      while (offset >= static_cast<std::size_t>(n - i)) {
        offset -= static_cast<std::size_t>(n - i);
        ++i;
      }
      const int j = i + static_cast<int>(offset);

      double dy = -tau * drift(i, j);
      if (noisy) {
        const double z = opts.noise_override ? opts.noise_override(i, j, k)
                                             : coordinate_normal(rng, i, j, k);
        dy += sigma(i, j) * sqrt_tau * z;
      }
      const SkorokhodStep s = skorokhod_step(x(i, j), dy, box);
      next.set_unchecked(i, j, s.x);
      if (opts.record_local_times) {
        dl_lo.set_unchecked(i, j, s.dl_minus);
        dl_hi.set_unchecked(i, j, s.dl_plus);
      }
    });

    x = next;
    traj.states.push_back(x);
    if (opts.record_local_times) {
      SymMatrix cum_lo = traj.l_lower.back();
      SymMatrix cum_hi = traj.l_upper.back();
      for (int q = 0; q < cum_lo.pair_count(); ++q) {
        cum_lo.packed()[static_cast<std::size_t>(q)] += dl_lo.packed()[static_cast<std::size_t>(q)];
        cum_hi.packed()[static_cast<std::size_t>(q)] += dl_hi.packed()[static_cast<std::size_t>(q)];
      }
      traj.l_lower.push_back(std::move(cum_lo));
      traj.l_upper.push_back(std::move(cum_hi));
    }
  }
  return traj;
}

// --- trajectory CSV ------------------------------------------------------------

// long format `t,i,j,x[,lminus,lplus]`, 1-based indices, upper triangle
inline void write_trajectory_csv(const Trajectory& traj, std::ostream& os, int every = 1) {
  const bool lt = traj.has_local_times();
  os << (lt ? "t,i,j,x,lminus,lplus\n" : "t,i,j,x\n");
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (every > 1 && k % static_cast<std::size_t>(every) != 0 && k + 1 != traj.states.size())
      continue;
    const SymMatrix& a = traj.states[k];
    for (int i = 0; i < a.size(); ++i)
      for (int j = i; j < a.size(); ++j) {
        os << detail::format_double(traj.schedule.times[k]) << "," << (i + 1) << "," << (j + 1)
           << "," << detail::format_double(a(i, j));
        if (lt)
          os << "," << detail::format_double(traj.l_lower[k](i, j)) << ","
             << detail::format_double(traj.l_upper[k](i, j));
        os << "\n";
      }
  }
}

}  // namespace graphon
