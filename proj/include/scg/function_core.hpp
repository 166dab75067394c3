#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scg/error.hpp"

namespace scg {

using complex = std::complex<double>;

class Grid {
 public:
  explicit Grid(std::size_t size) : size_(size) {
    if (size < 2) throw domain_error("grid needs at least 2 entries");
  }

  std::size_t size() const noexcept { return size_; }
  double spacing() const noexcept { return 1.0 / static_cast<double>(size_); }
  double node(std::size_t j) const noexcept { return static_cast<double>(j) / static_cast<double>(size_); }

  // Floor quantization; x == 1 lands in the last cell.
  std::size_t index_of(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw domain_error("LUT argument outside [0,1]: " + std::to_string(x));
    auto j = static_cast<std::size_t>(x * static_cast<double>(size_));
    return j < size_ ? j : size_ - 1;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t size_;
};

class LutFunction {
 public:
  explicit LutFunction(Grid grid) : grid_(grid), values_(grid.size()) {}

  LutFunction(Grid grid, std::vector<complex> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw shape_error("LUT length does not match grid");
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw domain_error("LUT value is not finite");
  }

  static LutFunction constant(Grid grid, complex c) {
    LutFunction f(grid);
    std::fill(f.values_.begin(), f.values_.end(), c);
    return f;
  }

  template <class F>
  static LutFunction sample(Grid grid, F&& fn) {
    std::vector<complex> vals(grid.size());
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = complex(fn(grid.node(j)));
    return LutFunction(grid, std::move(vals));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const complex> values() const noexcept { return values_; }
  std::span<complex> values() noexcept { return values_; }
  complex operator[](std::size_t j) const { return values_[j]; }
  complex& operator[](std::size_t j) { return values_[j]; }

  complex operator()(double x) const { return values_[grid_.index_of(x)]; }

 private:
  Grid grid_;
  std::vector<complex> values_;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw shape_error("grid mismatch");
}

inline complex lut_eval(const LutFunction& f, double x) { return f(x); }

inline void lut_axpy_inplace(LutFunction& u, complex alpha, const LutFunction& v) {
  require_same_grid(u.grid(), v.grid());
  auto out = u.values();
  auto in = v.values();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += alpha * in[j];
}

inline LutFunction lut_axpy(const LutFunction& u, complex alpha, const LutFunction& v) {
  LutFunction r = u;
  lut_axpy_inplace(r, alpha, v);
  return r;
}

enum class DensityKind { uniform, rayleigh, histogram, custom };

class Density {
 public:
  // Takes raw nonnegative weights and rescales them to unit quadrature integral.
  static Density from_weights(Grid grid, std::vector<double> w, DensityKind kind = DensityKind::custom,
                              double sigma = 0.0) {
    if (w.size() != grid.size()) throw shape_error("density length does not match grid");
    double total = 0.0;
    for (double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw domain_error("density weight must be finite and nonnegative");
      total += x;
    }
    total *= grid.spacing();
    if (!(total > 0.0)) throw domain_error("density has zero mass");
    for (double& x : w) x /= total;
    return Density(grid, std::move(w), kind, sigma);
  }

  static Density uniform(Grid grid) {
    return Density(grid, std::vector<double>(grid.size(), 1.0), DensityKind::uniform, 0.0);
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> weights() const noexcept { return pdf_; }
  double operator[](std::size_t j) const { return pdf_[j]; }
  DensityKind kind() const noexcept { return kind_; }
  double sigma() const noexcept { return sigma_; }

  LutFunction pdf() const {
    std::vector<complex> v(pdf_.begin(), pdf_.end());
    return LutFunction(grid_, std::move(v));
  }

  double integral() const {
    double s = 0.0;
    for (double x : pdf_) s += x;
    return s * grid_.spacing();
  }

 private:
  Density(Grid grid, std::vector<double> pdf, DensityKind kind, double sigma)
      : grid_(grid), pdf_(std::move(pdf)), kind_(kind), sigma_(sigma) {}

  Grid grid_;
  std::vector<double> pdf_;
  DensityKind kind_;
  double sigma_;
};

struct SampleSet {
  SampleSet() = default;
  SampleSet(std::vector<double> y_, std::vector<complex> z_) : y(std::move(y_)), z(std::move(z_)) { validate(); }

  std::size_t size() const noexcept { return y.size(); }

  void validate() const {
    if (y.size() != z.size()) throw shape_error("sample arrays differ in length");
    for (double v : y)
      if (!(v >= 0.0 && v <= 1.0)) throw domain_error("sample outside [0,1]");
  }

  std::vector<double> y;
  std::vector<complex> z;
};

inline complex inner_exact(const LutFunction& u, const LutFunction& v, const Density& rho) {
  require_same_grid(u.grid(), v.grid());
  require_same_grid(u.grid(), rho.grid());
  auto a = u.values();
  auto b = v.values();
  auto w = rho.weights();
  complex s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += w[j] * (std::conj(a[j]) * b[j]);
  return s * u.grid().spacing();
}

inline complex inner_sample(const LutFunction& u, const LutFunction& v, const SampleSet& s) {
  if (s.size() == 0) throw empty_sample_error("inner_sample on an empty sample set");
  require_same_grid(u.grid(), v.grid());
  complex acc = 0.0;
  for (double y : s.y) {
    std::size_t j = u.grid().index_of(y);
    acc += std::conj(u[j]) * v[j];
  }
  return acc / static_cast<double>(s.size());
}

}  // namespace scg
