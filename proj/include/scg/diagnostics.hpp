#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "scg/basis.hpp"
#include "scg/error.hpp"
#include "scg/function_core.hpp"

namespace scg {

struct ErrorTrace {
  std::vector<double> h_uniform;
  std::vector<double> delta;
  std::vector<double> residual_norm_sq;
};

// Mean square deviation from a reference at `points` evenly spaced abscissae,
// the midpoints of equal cells of [0,1].
template <class F>
double mse_uniform(const LutFunction& u, F&& g_ref, std::size_t points) {
  if (points < 2) throw domain_error("mse_uniform needs at least 2 points");
  double s = 0.0;
  for (std::size_t m = 0; m < points; ++m) {
    double t = (static_cast<double>(m) + 0.5) / static_cast<double>(points);
    s += std::norm(u(t) - complex(g_ref(t)));
  }
  return s / static_cast<double>(points);
}

// J_k(u) = <g - u, g - u>_k with g known only through the samples z.
inline double sample_objective(const LutFunction& u, const SampleSet& s) {
  if (s.size() == 0) throw empty_sample_error("objective on an empty sample set");
  double acc = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) acc += std::norm(s.z[n] - u(s.y[n]));
  return acc / static_cast<double>(s.size());
}

inline double sample_distance_sq(const LutFunction& u, const LutFunction& w, const SampleSet& s) {
  LutFunction d = lut_axpy(u, -1.0, w);
  return inner_sample(d, d, s).real();
}

inline double delta_ratio(const LutFunction& u_before, const LutFunction& u_after, const SampleSet& s,
                          const LutFunction& ubar) {
  double den = sample_distance_sq(u_before, ubar, s);
  if (den == 0.0) return 0.0;
  return sample_distance_sq(u_after, ubar, s) / den;
}

struct OracleSolution {
  Eigen::VectorXcd coefficients;
  LutFunction ubar;
};

namespace detail {

// The oracle is assembled and factored in extended precision: monomial bases
// at M = 10 have Gram condition numbers near 1e13, which leaves a double
// precision solve with only about six correct digits.
using xcomplex = std::complex<long double>;
using XMatrix = Eigen::Matrix<xcomplex, Eigen::Dynamic, Eigen::Dynamic>;
using XVector = Eigen::Matrix<xcomplex, Eigen::Dynamic, 1>;

inline xcomplex widen(complex v) { return {static_cast<long double>(v.real()), static_cast<long double>(v.imag())}; }

inline OracleSolution solve_normal(const BasisSet& basis, const XMatrix& a, const XVector& b) {
  Eigen::PartialPivLU<XMatrix> lu(a);
  const auto& lu_m = lu.matrixLU();
  long double dmax = 0.0L, dmin = std::numeric_limits<long double>::infinity();
  Eigen::Index imin = 0;
  for (Eigen::Index i = 0; i < lu_m.rows(); ++i) {
    long double d = std::abs(lu_m(i, i));
    dmax = std::max(dmax, d);
    if (d < dmin) {
      dmin = d;
      imin = i;
    }
  }
  if (!(dmin > 1e-12L * dmax)) throw rank_error("normal equations are singular", static_cast<std::size_t>(imin));
  XVector cx = lu.solve(b);

  const std::size_t size = basis.grid().size();
  std::vector<xcomplex> acc(size, xcomplex(0.0L));
  for (std::size_t m = 0; m < basis.size(); ++m) {
    const auto f = basis[m].values();
    const xcomplex cm = cx(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < size; ++j) acc[j] += cm * widen(f[j]);
  }
  LutFunction u(basis.grid());
  for (std::size_t j = 0; j < size; ++j) u[j] = complex(static_cast<double>(acc[j].real()), static_cast<double>(acc[j].imag()));
  Eigen::VectorXcd c(cx.size());
  for (Eigen::Index m = 0; m < cx.size(); ++m) c(m) = complex(static_cast<double>(cx(m).real()), static_cast<double>(cx(m).imag()));
  return {std::move(c), std::move(u)};
}

}  // namespace detail

inline OracleSolution normal_eq_oracle(const BasisSet& basis, const Density& rho, const LutFunction& g) {
  require_same_grid(basis.grid(), rho.grid());
  require_same_grid(basis.grid(), g.grid());
  const auto m = static_cast<Eigen::Index>(basis.size());
  const std::size_t size = basis.grid().size();
  detail::XMatrix a = detail::XMatrix::Zero(m, m);
  detail::XVector b = detail::XVector::Zero(m);
  const auto w = rho.weights();
  const auto gv = g.values();
  std::vector<detail::xcomplex> wf(size);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto fi = basis[static_cast<std::size_t>(i)].values();
    for (std::size_t j = 0; j < size; ++j) wf[j] = static_cast<long double>(w[j]) * std::conj(detail::widen(fi[j]));
    for (Eigen::Index k = i; k < m; ++k) {
      const auto fk = basis[static_cast<std::size_t>(k)].values();
      detail::xcomplex acc = 0.0L;
      for (std::size_t j = 0; j < size; ++j) acc += wf[j] * detail::widen(fk[j]);
      a(i, k) = acc / static_cast<long double>(size);
      a(k, i) = std::conj(a(i, k));
    }
    a(i, i) = a(i, i).real();
    detail::xcomplex acc = 0.0L;
    for (std::size_t j = 0; j < size; ++j) acc += wf[j] * detail::widen(gv[j]);
    b(i) = acc / static_cast<long double>(size);
  }
  return detail::solve_normal(basis, a, b);
}

inline OracleSolution normal_eq_oracle(const BasisSet& basis, const SampleSet& s) {
  s.validate();
  const auto m = static_cast<Eigen::Index>(basis.size());
  detail::XMatrix a = detail::XMatrix::Zero(m, m);
  detail::XVector b = detail::XVector::Zero(m);
  detail::XVector phi(m);
  for (std::size_t n = 0; n < s.size(); ++n) {
    std::size_t j = basis.grid().index_of(s.y[n]);
    for (Eigen::Index i = 0; i < m; ++i) phi(i) = detail::widen(basis[static_cast<std::size_t>(i)][j]);
    a.noalias() += phi.conjugate() * phi.transpose();
    b += phi.conjugate() * detail::widen(s.z[n]);
  }
  const auto inv_n = 1.0L / static_cast<long double>(s.size());
  a *= inv_n;
  b *= inv_n;
  return detail::solve_normal(basis, a, b);
}

inline double condition_number(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw breakdown_error("eigensolver did not converge");
  Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  double lo = ev.minCoeff();
  if (lo < 1e-300) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

}  // namespace scg
