#pragma once

// Symmetric matrices with entries confined to a coordinate box. Only the
// upper triangle is stored, so A(i,j) == A(j,i) holds by construction.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "graphon/errors.hpp"

namespace graphon {

struct Box {
  double lo = -1.0;
  double hi = 1.0;

  double clamp(double x) const { return std::min(hi, std::max(lo, x)); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  double mid() const { return 0.5 * (lo + hi); }

  friend bool operator==(const Box& a, const Box& b) = default;
};

inline const Box kUnitBox{0.0, 1.0};
inline const Box kSignedBox{-1.0, 1.0};

class SymMatrix {
 public:
  SymMatrix() = default;
  SymMatrix(int n, Box box, double fill = 0.0)
      : n_(n), box_(box), a_(static_cast<std::size_t>(n) * (n + 1) / 2, fill) {
    if (n <= 0) throw DomainError("SymMatrix: dimension must be positive");
    if (!(box.lo < box.hi)) throw DomainError("SymMatrix: box must satisfy lo < hi");
    if (!box.contains(fill)) throw DomainError("SymMatrix: fill value outside box");
  }

  int size() const { return n_; }
  const Box& box() const { return box_; }
  int pair_count() const { return n_ * (n_ + 1) / 2; }

  double operator()(int i, int j) const { return a_[index(i, j)]; }

  void set(int i, int j, double v) {
    if (!box_.contains(v)) throw DomainError("SymMatrix::set: value outside box");
    a_[index(i, j)] = v;
  }

  // clamp-free writer for callers that project afterwards
  void set_unchecked(int i, int j, double v) { a_[index(i, j)] = v; }

  // packed upper triangle, (i,j) with i <= j, row-major
  const std::vector<double>& packed() const { return a_; }
  std::vector<double>& packed() { return a_; }

  static int pack_index(int n, int i, int j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  }

  double frobenius_sq() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const double v = (*this)(i, j);
        s += v * v;
      }
    return s;
  }

  double frobenius() const { return std::sqrt(frobenius_sq()); }

  double max_abs_diff(const SymMatrix& other) const {
    double d = 0.0;
    for (std::size_t p = 0; p < a_.size(); ++p) d = std::max(d, std::abs(a_[p] - other.a_[p]));
    return d;
  }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.n_ == b.n_ && a.box_ == b.box_ && a.a_ == b.a_;
  }

  SymMatrix permuted(const std::vector<int>& p) const {
    SymMatrix out(n_, box_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) out.set_unchecked(i, j, (*this)(p[i], p[j]));
    return out;
  }

 private:
  int index(int i, int j) const { return pack_index(n_, i, j); }

  int n_ = 0;
  Box box_{};
  std::vector<double> a_;
};

// --- CSV persistence -------------------------------------------------------
//
// Dense row-major CSV with a header line `# sym n=<n> box=<lo>,<hi>`.
// Readers reject asymmetry beyond 1e-12 and symmetrize by averaging.

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_sym_matrix_csv(const SymMatrix& a, std::ostream& os) {
  os << "# sym n=" << a.size() << " box=" << detail::format_double(a.box().lo) << ","
     << detail::format_double(a.box().hi) << "\n";
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) {
      if (j) os << ",";
      os << detail::format_double(a(i, j));
    }
    os << "\n";
  }
}

inline void write_sym_matrix_csv(const SymMatrix& a, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot open for writing: " + path);
  write_sym_matrix_csv(a, os);
}

inline SymMatrix read_sym_matrix_csv(std::istream& is, const std::string& origin = "<stream>") {
  std::string header;
  if (!std::getline(is, header)) throw IOError(origin + ": empty file");
  int n = 0;
  double lo = 0.0, hi = 0.0;
  if (std::sscanf(header.c_str(), "# sym n=%d box=%lf,%lf", &n, &lo, &hi) != 3 || n <= 0)
    throw IOError(origin + ": bad header `" + header + "`");

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != n) throw IOError(origin + ": row length mismatch");
    rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != n) throw IOError(origin + ": row count mismatch");

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(rows[i][j] - rows[j][i]) > 1e-12)
        throw IOError(origin + ": matrix not symmetric within 1e-12");

  SymMatrix a(n, Box{lo, hi});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = 0.5 * (rows[i][j] + rows[j][i]);
      if (!a.box().contains(v)) throw IOError(origin + ": entry outside declared box");
      a.set_unchecked(i, j, v);
    }
  return a;
}

inline SymMatrix read_sym_matrix_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open: " + path);
  return read_sym_matrix_csv(is, path);
}

}  // namespace graphon
