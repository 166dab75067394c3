#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "scg/error.hpp"
#include "scg/function_core.hpp"

namespace scg {

class BasisSet {
 public:
  BasisSet(std::vector<LutFunction> functions, Density weight, bool orthonormal)
      : functions_(std::move(functions)), weight_(std::move(weight)), orthonormal_(orthonormal) {
    if (functions_.empty()) throw domain_error("basis needs at least one function");
    for (const auto& f : functions_) require_same_grid(f.grid(), weight_.grid());
  }

  std::size_t size() const noexcept { return functions_.size(); }
  const Grid& grid() const noexcept { return weight_.grid(); }
  const LutFunction& operator[](std::size_t i) const { return functions_[i]; }
  const std::vector<LutFunction>& functions() const noexcept { return functions_; }
  const Density& weight() const noexcept { return weight_; }
  bool orthonormal() const noexcept { return orthonormal_; }

 private:
  std::vector<LutFunction> functions_;
  Density weight_;
  bool orthonormal_;
};

inline BasisSet monomial_basis(std::size_t m, Grid grid) {
  if (m < 1) throw domain_error("basis size must be positive");
  std::vector<LutFunction> fs;
  fs.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    fs.push_back(LutFunction::sample(grid, [i](double x) { return std::pow(x, static_cast<double>(i)); }));
  return BasisSet(std::move(fs), Density::uniform(grid), false);
}

namespace detail {

inline double norm_exact(const LutFunction& f, const Density& rho) { return std::sqrt(inner_exact(f, f, rho).real()); }

inline void scale(LutFunction& f, double s) {
  for (auto& v : f.values()) v *= s;
}

}  // namespace detail

// Modified Gram-Schmidt with a second pass against the already accepted functions.
inline BasisSet gram_schmidt(const BasisSet& basis, const Density& rho) {
  require_same_grid(basis.grid(), rho.grid());
  std::vector<LutFunction> out;
  out.reserve(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    LutFunction w = basis[k];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out) lut_axpy_inplace(w, -inner_exact(q, w, rho), q);
    double nrm = detail::norm_exact(w, rho);
    if (!(nrm >= 1e-12)) throw rank_error("Gram-Schmidt pivot below 1e-12", k);
    detail::scale(w, 1.0 / nrm);
    out.push_back(std::move(w));
  }
  return BasisSet(std::move(out), rho, true);
}

// Stieltjes procedure in orthonormal form:
//   b_{k+1} psi_{k+1} = (x - a_k) psi_k - b_k psi_{k-1}
inline BasisSet orthonormal_polynomials_3term(std::size_t m, const Density& rho, Grid grid) {
  if (m < 1) throw domain_error("basis size must be positive");
  require_same_grid(grid, rho.grid());
  std::vector<LutFunction> out;
  out.reserve(m);

  LutFunction p = LutFunction::constant(grid, 1.0);
  double nrm2 = inner_exact(p, p, rho).real();
  if (!(nrm2 >= 1e-14)) throw breakdown_error("degenerate measure at degree 0");
  detail::scale(p, 1.0 / std::sqrt(nrm2));
  out.push_back(p);

  const auto w = rho.weights();
  const double h = grid.spacing();
  double b_prev = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const auto cur = out[k].values();
    double a = 0.0;
    for (std::size_t j = 0; j < cur.size(); ++j) a += w[j] * grid.node(j) * std::norm(cur[j]);
    a *= h;

    LutFunction q(grid);
    auto qv = q.values();
    for (std::size_t j = 0; j < qv.size(); ++j) qv[j] = (grid.node(j) - a) * cur[j];
    if (k > 0) lut_axpy_inplace(q, -b_prev, out[k - 1]);

    double q2 = inner_exact(q, q, rho).real();
    if (!(q2 >= 1e-14)) throw breakdown_error("degenerate measure at degree " + std::to_string(k + 1));
    b_prev = std::sqrt(q2);
    detail::scale(q, 1.0 / b_prev);
    out.push_back(std::move(q));
  }
  return BasisSet(std::move(out), rho, true);
}

inline Eigen::MatrixXcd covariance_matrix(const BasisSet& basis, const Density& rho) {
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd a(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    a(i, i) = inner_exact(basis[i], basis[i], rho).real();
    for (Eigen::Index j = i + 1; j < m; ++j) {
      a(i, j) = inner_exact(basis[i], basis[j], rho);
      a(j, i) = std::conj(a(i, j));
    }
  }
  return a;
}

inline Eigen::MatrixXcd covariance_matrix(const BasisSet& basis, const SampleSet& s) {
  if (s.size() == 0) throw empty_sample_error("covariance on an empty sample set");
  const auto m = static_cast<Eigen::Index>(basis.size());
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXcd phi(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    std::size_t j = basis.grid().index_of(s.y[r]);
    for (Eigen::Index i = 0; i < m; ++i) phi(r, i) = basis[i][j];
  }
  Eigen::MatrixXcd a = phi.adjoint() * phi / static_cast<double>(n);
  Eigen::MatrixXcd herm = 0.5 * (a + a.adjoint());
  for (Eigen::Index i = 0; i < m; ++i) herm(i, i) = herm(i, i).real();
  return herm;
}

}  // namespace scg
