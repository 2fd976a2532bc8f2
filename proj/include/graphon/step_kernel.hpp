#pragma once

// Step kernels: symmetric functions on [0,1]^2 constant on the cells of an
// m-equipartition, plus the embedding of symmetric matrices and the L^2
// projection back onto matrices. Mixed resolutions are always reconciled by
// exact refinement to the lcm grid, never by resampling.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "graphon/errors.hpp"
#include "graphon/rng.hpp"
#include "graphon/sym_matrix.hpp"

namespace graphon {

class StepKernel {
 public:
  StepKernel() = default;
  StepKernel(int m, Box box, double fill = 0.0)
      : m_(m), box_(box), v_(static_cast<std::size_t>(m) * m, fill) {
    if (m <= 0) throw DomainError("StepKernel: resolution must be positive");
    if (!(box.lo < box.hi)) throw DomainError("StepKernel: box must satisfy lo < hi");
  }

  int resolution() const { return m_; }
  const Box& box() const { return box_; }

  double operator()(int a, int b) const { return v_[static_cast<std::size_t>(a) * m_ + b]; }

  // writes the mirrored entry too; symmetry is maintained, not checked
  void set(int a, int b, double x) {
    v_[static_cast<std::size_t>(a) * m_ + b] = x;
    v_[static_cast<std::size_t>(b) * m_ + a] = x;
  }

  // point evaluation; cell (a,b) covers [a/m,(a+1)/m) x [b/m,(b+1)/m)
  double at_point(double x, double y) const {
    const auto cell = [this](double u) {
      int c = static_cast<int>(u * m_);
      return std::min(std::max(c, 0), m_ - 1);
    };
    return (*this)(cell(x), cell(y));
  }

  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  friend bool operator==(const StepKernel& a, const StepKernel& b) {
    return a.m_ == b.m_ && a.box_ == b.box_ && a.v_ == b.v_;
  }

  StepKernel permuted_cells(const std::vector<int>& p) const {
    StepKernel out(m_, box_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b) out.v_[static_cast<std::size_t>(a) * m_ + b] = (*this)(p[a], p[b]);
    return out;
  }

  double max_abs() const {
    double s = 0.0;
    for (double x : v_) s = std::max(s, std::abs(x));
    return s;
  }

 private:
  int m_ = 0;
  Box box_{};
  std::vector<double> v_;
};

// kernel embedding of a matrix: one grid cell per entry
inline StepKernel embed_kernel(const SymMatrix& a) {
  const int n = a.size();
  StepKernel w(n, a.box());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) w.set(i, j, a(i, j));
  return w;
}

// L^2 projection onto n-step matrices: exact cell averaging, rational
// overlaps when m is not a multiple of n
inline SymMatrix restrict_matrix(const StepKernel& w, int n) {
  const int m = w.resolution();
  SymMatrix out(n, w.box());
  if (m % n == 0) {
    const int r = m / n;
    const double inv = 1.0 / (static_cast<double>(r) * r);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int p = 0; p < r; ++p)
          for (int q = 0; q < r; ++q) s += w(i * r + p, j * r + q);
        out.set_unchecked(i, j, r == 1 ? s : s * inv);
      }
    return out;
  }
  // overlap of n-cell i with m-cell p, in units of 1/(n*m)
  const auto overlap = [n, m](int i, int p) {
    const long long lo = std::max<long long>(static_cast<long long>(i) * m, static_cast<long long>(p) * n);
    const long long hi =
        std::min<long long>(static_cast<long long>(i + 1) * m, static_cast<long long>(p + 1) * n);
    return std::max<long long>(0, hi - lo);
  };
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < m; ++p) {
        const long long oi = overlap(i, p);
        if (!oi) continue;
        for (int q = 0; q < m; ++q) {
          const long long oj = overlap(j, q);
          if (!oj) continue;
          s += w(p, q) * static_cast<double>(oi * oj);
        }
      }
      // cell area is 1/n^2; overlap areas carry 1/(nm)^2
      out.set_unchecked(i, j, s / (static_cast<double>(m) * m));
    }
  return out;
}

// exact refinement: value repetition onto a multiple resolution
inline StepKernel refine_kernel(const StepKernel& w, int target) {
  const int m = w.resolution();
  if (target == m) return w;
  if (target % m != 0) throw DomainError("refine_kernel: target must be a multiple of the resolution");
  const int r = target / m;
  StepKernel out(target, w.box());
  for (int a = 0; a < target; ++a)
    for (int b = a; b < target; ++b) out.set(a, b, w(a / r, b / r));
  return out;
}

inline int common_resolution(const StepKernel& a, const StepKernel& b) {
  return std::lcm(a.resolution(), b.resolution());
}

// difference on the common refinement; box widened to hold the values
inline StepKernel kernel_difference(const StepKernel& a, const StepKernel& b) {
  const int l = common_resolution(a, b);
  const StepKernel ra = refine_kernel(a, l);
  const StepKernel rb = refine_kernel(b, l);
  const double span = std::max(std::abs(a.box().hi - b.box().lo), std::abs(b.box().hi - a.box().lo));
  StepKernel d(l, Box{-span, span});
  for (int i = 0; i < l; ++i)
    for (int j = i; j < l; ++j) d.set(i, j, ra(i, j) - rb(i, j));
  return d;
}

// --- norms over the full square [0,1]^2 -------------------------------------

inline double l2_norm_sq(const StepKernel& w) {
  const int m = w.resolution();
  double s = 0.0;
  for (double x : w.values()) s += x * x;
  return s / (static_cast<double>(m) * m);
}

inline double l2_norm(const StepKernel& w) { return std::sqrt(l2_norm_sq(w)); }

inline double l1_norm(const StepKernel& w) {
  const int m = w.resolution();
  double s = 0.0;
  for (double x : w.values()) s += std::abs(x);
  return s / (static_cast<double>(m) * m);
}

inline double linf_norm(const StepKernel& w) { return w.max_abs(); }

inline double mean_value(const StepKernel& w) {
  const int m = w.resolution();
  double s = 0.0;
  for (double x : w.values()) s += x;
  return s / (static_cast<double>(m) * m);
}

inline double l2_dist(const StepKernel& a, const StepKernel& b) {
  return l2_norm(kernel_difference(a, b));
}

// --- sampling ---------------------------------------------------------------

struct SampledMatrix {
  SymMatrix matrix;
  std::vector<double> points;  // the uniform draws U_1..U_k
};

// k x k matrix (W(U_i,U_j)) with U_i i.i.d. uniform; diagonal included
inline SampledMatrix sample_matrix(const StepKernel& w, int k, const RngSpec& rng) {
  if (k < 2) throw DomainError("sample_matrix: need k >= 2");
  RngStream us = rng.stream(rng_tag::kSample);
  std::vector<double> pts(k);
  for (int i = 0; i < k; ++i) pts[i] = us.uniform01();
  SymMatrix a(k, w.box());
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) a.set_unchecked(i, j, w.at_point(pts[i], pts[j]));
  return {std::move(a), std::move(pts)};
}

// --- CSV (same dense format as matrices; n is the grid resolution) ----------

inline void write_kernel_csv(const StepKernel& w, const std::string& path) {
  SymMatrix tmp(w.resolution(), w.box());
  for (int i = 0; i < w.resolution(); ++i)
    for (int j = i; j < w.resolution(); ++j) tmp.set_unchecked(i, j, w(i, j));
  write_sym_matrix_csv(tmp, path);
}

inline StepKernel read_kernel_csv(const std::string& path) {
  const SymMatrix a = read_sym_matrix_csv_file(path);
  return embed_kernel(a);
}

}  // namespace graphon
