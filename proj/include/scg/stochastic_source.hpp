#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "scg/error.hpp"
#include "scg/function_core.hpp"
#include "scg/random.hpp"

namespace scg {

struct RayleighSpec {
  double mean = 0.25;
  double variance = 0.0625;
  std::uint64_t seed = 1;
};

struct HistogramSpec {
  std::size_t bins = 64;
};

inline constexpr double density_floor = 1e-8;

// Radius of a pair of independent Gaussians, draws beyond 1 rejected.
// The stream continues across calls so a run can pull one set per iteration.
class RayleighSource {
 public:
  explicit RayleighSource(const RayleighSpec& spec) : spec_(spec), rng_(spec.seed) {
    if (!(spec.variance > 0.0)) throw domain_error("Rayleigh variance must be positive");
    sd_ = std::sqrt(spec.variance);
  }

  std::vector<double> next(std::size_t n) {
    std::vector<double> y;
    y.reserve(n);
    while (y.size() < n) {
      double a = spec_.mean + sd_ * rng_.normal();
      double b = spec_.mean + sd_ * rng_.normal();
      double r = std::hypot(a, b);
      if (r <= 1.0) y.push_back(r);
    }
    return y;
  }

 private:
  RayleighSpec spec_;
  Rng rng_;
  double sd_;
};

inline std::vector<double> rayleigh_samples(const RayleighSpec& spec, std::size_t n) {
  return RayleighSource(spec).next(n);
}

inline double estimate_sigma(std::span<const double> y) {
  if (y.empty()) throw empty_sample_error("estimate_sigma on empty input");
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s / (2.0 * static_cast<double>(y.size())));
}

inline Density rayleigh_density(double sigma, Grid grid) {
  if (!(sigma > 0.0)) throw domain_error("Rayleigh sigma must be positive");
  std::vector<double> w(grid.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    double x = grid.node(j);
    w[j] = x * std::exp(-x * x / (2.0 * sigma * sigma)) / (sigma * sigma);
  }
  return Density::from_weights(grid, std::move(w), DensityKind::rayleigh, sigma);
}

inline Density uniform_density(Grid grid) { return Density::uniform(grid); }

inline Density histogram_density(std::span<const double> y, const HistogramSpec& spec, Grid grid) {
  if (y.empty()) throw empty_sample_error("histogram of empty input");
  if (spec.bins < 2) throw domain_error("histogram needs at least 2 bins");
  const double nb = static_cast<double>(spec.bins);
  std::vector<double> counts(spec.bins, 0.0);
  for (double v : y) {
    if (!(v >= 0.0 && v <= 1.0)) throw domain_error("histogram sample outside [0,1]");
    auto b = static_cast<std::size_t>(v * nb);
    counts[b < spec.bins ? b : spec.bins - 1] += 1.0;
  }
  // Bin heights as a density on [0,1], floored so the weight stays positive.
  for (double& c : counts) c = std::max(c * nb / static_cast<double>(y.size()), density_floor);
  std::vector<double> w(grid.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto b = static_cast<std::size_t>(grid.node(j) * nb);
    w[j] = counts[b < spec.bins ? b : spec.bins - 1];
  }
  return Density::from_weights(grid, std::move(w), DensityKind::histogram);
}

}  // namespace scg
