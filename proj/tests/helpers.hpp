#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "scg/basis.hpp"
#include "scg/function_core.hpp"

namespace testing_support {

using scg::complex;

inline scg::LutFunction random_lut(scg::Grid g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<complex> v(g.size());
  for (auto& x : v) x = {nd(rng), nd(rng)};
  return scg::LutFunction(g, std::move(v));
}

// Smooth positive weight: exp of a random low-order trigonometric sum.
inline scg::Density random_density(scg::Grid g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 0.5);
  double a = nd(rng), b = nd(rng), c = nd(rng);
  std::vector<double> w(g.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    double x = g.node(j);
    w[j] = std::exp(a * std::cos(2.0 * M_PI * x) + b * std::sin(2.0 * M_PI * x) + c * x);
  }
  return scg::Density::from_weights(g, std::move(w));
}

// Random real polynomial combinations of an orthonormal basis, mixed by a
// well-conditioned upper-triangular matrix so spans stay nested.
inline scg::BasisSet mixed_basis(const scg::BasisSet& psi, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<scg::LutFunction> out;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    scg::LutFunction f = psi[k];
    const double scale = 1.0 + std::abs(nd(rng));
    for (auto& v : f.values()) v *= scale;
    for (std::size_t i = 0; i < k; ++i) scg::lut_axpy_inplace(f, complex(nd(rng), nd(rng)), psi[i]);
    out.push_back(std::move(f));
  }
  return scg::BasisSet(std::move(out), psi.weight(), false);
}

// Orthogonal polynomials of the uniform measure on the nodes 0..N (discrete
// Chebyshev / Hahn with a = b = 0), in terminating hypergeometric form.
inline double hahn(std::size_t n, double x, double big_n) {
  double sum = 0.0;
  double term = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    sum += term;
    double kk = static_cast<double>(k);
    double nn = static_cast<double>(n);
    term *= (kk - nn) * (nn + kk + 1.0) * (kk - x) / ((kk + 1.0) * (kk + 1.0) * (kk - big_n));
  }
  return sum;
}

// Shifted Legendre polynomial on [0,1], orthonormal for the continuous uniform measure.
inline double shifted_legendre(std::size_t n, double x) {
  double t = 2.0 * x - 1.0;
  double p0 = 1.0, p1 = t;
  if (n == 0) return 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    double kk = static_cast<double>(k);
    double p2 = ((2.0 * kk + 1.0) * t * p1 - kk * p0) / (kk + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1 * std::sqrt(2.0 * static_cast<double>(n) + 1.0);
}

inline double max_gram_error(const scg::BasisSet& b, const scg::Density& rho) {
  double e = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      e = std::max(e, std::abs(scg::inner_exact(b[i], b[j], rho) - complex(i == j ? 1.0 : 0.0)));
  return e;
}

}  // namespace testing_support
