#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "scg/basis.hpp"
#include "scg/error.hpp"
#include "scg/function_core.hpp"
#include "scg/solver_uni.hpp"

namespace scg {

using Injection = std::function<complex(complex)>;

inline complex identity_injection(complex x) { return x; }

struct TapSpec {
  Injection tau = identity_injection;
  std::shared_ptr<const BasisSet> psi;
};

struct MultiSampleSet {
  std::vector<std::vector<complex>> y;  // y[q][n] = input delayed by q samples
  std::vector<complex> z;

  std::size_t taps() const noexcept { return y.size(); }
  std::size_t size() const noexcept { return z.size(); }

  // Delay lines of one signal, with zeros before its first sample.
  static MultiSampleSet from_signal(std::span<const complex> input, std::span<const complex> target, std::size_t q) {
    if (input.size() != target.size()) throw shape_error("input and target differ in length");
    if (q < 1) throw domain_error("tap count must be positive");
    MultiSampleSet s;
    s.y.assign(q, std::vector<complex>(input.size()));
    for (std::size_t t = 0; t < q; ++t)
      for (std::size_t n = t; n < input.size(); ++n) s.y[t][n] = input[n - t];
    s.z.assign(target.begin(), target.end());
    return s;
  }
};

// |x| for a LUT lookup. Samples clipped onto the unit circle may land one
// rounding step above 1, which is tolerated.
inline double lut_magnitude(complex x) {
  double a = std::abs(x);
  if (!(a <= 1.0 + 1e-12)) throw domain_error("magnitude above 1 at a LUT input");
  return a < 1.0 ? a : 1.0;
}

enum class BetaRule { orthogonalizing, fletcher_reeves };
enum class StepRule { line_search, omega_over_lambda };

struct MulOptions {
  ResetPolicy policy;
  BetaRule beta_rule = BetaRule::orthogonalizing;
  StepRule step_rule = StepRule::line_search;
  bool lambda_per_sample = true;
};

struct MulStepReport {
  std::vector<std::vector<complex>> gamma;
  complex beta = 0.0;
  complex alpha = 0.0;
  double omega = 0.0;
  double lambda = 0.0;
  double residual = 0.0;  // ||z - P(y)|| / ||z|| before the update
  bool did_reset = false;
  bool skipped = false;
  std::size_t basis_evaluations = 0;
};

class MulState {
 public:
  MulState(std::vector<TapSpec> taps, MulOptions options = {}) : taps_(std::move(taps)), opt_(options) {
    if (taps_.empty()) throw domain_error("at least one tap is required");
    const Grid grid = taps_[0].psi->grid();
    std::size_t dim = 0;
    for (const auto& t : taps_) {
      if (!t.psi) throw domain_error("tap without basis");
      require_same_grid(t.psi->grid(), grid);
      dim += t.psi->size();
    }
    if (opt_.policy.period == 0) opt_.policy.period = dim;
    if (opt_.policy.period < 1 || opt_.policy.period > dim) throw domain_error("reset period must lie in [1, QM]");
    if (!(opt_.policy.epsilon > 0.0)) throw domain_error("reset threshold must be positive");
    u_.assign(taps_.size(), LutFunction(grid));
    v_.assign(taps_.size(), LutFunction(grid));
  }

  std::size_t taps() const noexcept { return taps_.size(); }
  const TapSpec& tap(std::size_t q) const { return taps_[q]; }
  const MulOptions& options() const noexcept { return opt_; }
  const std::vector<LutFunction>& u() const noexcept { return u_; }
  const std::vector<LutFunction>& v() const noexcept { return v_; }
  double omega() const noexcept { return omega_; }
  std::size_t k() const noexcept { return k_; }
  bool reset_pending() const noexcept { return reset_pending_; }
  void request_reset() noexcept { reset_pending_ = true; }

  // Installs a known envelope function, e.g. a previously trained predistorter.
  void set_u(std::size_t q, LutFunction f) {
    require_same_grid(f.grid(), u_.at(q).grid());
    u_[q] = std::move(f);
    reset_pending_ = true;
  }

  // z_n = sum_q tau_q(x_{n-q}) u^q(|x_{n-q}|), zero history before the block.
  std::vector<complex> apply(std::span<const complex> x) const {
    std::vector<complex> out(x.size());
    const Grid& grid = u_[0].grid();
    for (std::size_t n = 0; n < x.size(); ++n) {
      complex acc = 0.0;
      for (std::size_t q = 0; q < taps_.size() && q <= n; ++q) {
        complex xq = x[n - q];
        acc += taps_[q].tau(xq) * u_[q][grid.index_of(lut_magnitude(xq))];
      }
      out[n] = acc;
    }
    return out;
  }

 private:
  friend MulStepReport scg_mul_step(MulState&, const MultiSampleSet&);

  std::vector<TapSpec> taps_;
  MulOptions opt_;
  std::vector<LutFunction> u_;
  std::vector<LutFunction> v_;
  double omega_ = 0.0;
  std::size_t k_ = 0;
  std::size_t since_reset_ = 0;
  bool reset_pending_ = true;
};

inline std::vector<complex> predistort_apply(const MulState& state, std::span<const complex> x) { return state.apply(x); }

inline MulStepReport scg_mul_step(MulState& st, const MultiSampleSet& s) {
  const std::size_t nq = st.taps_.size();
  const std::size_t n = s.size();
  if (s.taps() != nq) throw shape_error("sample tap count does not match the predistorter");
  if (n == 0) throw empty_sample_error("SCG_MUL step on an empty sample set");
  const Grid& grid = st.u_[0].grid();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<std::vector<std::size_t>> idx(nq, std::vector<std::size_t>(n));
  std::vector<std::vector<complex>> tau(nq, std::vector<complex>(n));
  for (std::size_t q = 0; q < nq; ++q) {
    if (s.y[q].size() != n) throw shape_error("tap arrays differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      complex y = s.y[q][i];
      idx[q][i] = grid.index_of(lut_magnitude(y));
      tau[q][i] = st.taps_[q].tau(y);
    }
  }
  // Evaluates sum_q tau_q(y^q) f^q(|y^q|) at every sample.
  auto at_samples = [&](const std::vector<LutFunction>& f) {
    std::vector<complex> out(n, 0.0);
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t i = 0; i < n; ++i) out[i] += tau[q][i] * f[q][idx[q][i]];
    return out;
  };

  MulStepReport rep;
  std::vector<complex> err = at_samples(st.u_);
  double ez = 0.0, zz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = s.z[i] - err[i];
    ez += std::norm(err[i]);
    zz += std::norm(s.z[i]);
  }
  rep.residual = zz > 0.0 ? std::sqrt(ez / zz) : 0.0;

  std::vector<LutFunction> r;
  r.reserve(nq);
  double omega = 0.0;
  rep.gamma.resize(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    const BasisSet& psi = *st.taps_[q].psi;
    rep.gamma[q].resize(psi.size());
    for (std::size_t m = 0; m < psi.size(); ++m) {
      const auto f = psi[m].values();
      complex acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += std::conj(tau[q][i] * f[idx[q][i]]) * err[i];
      rep.gamma[q][m] = acc * inv_n;
      omega += std::norm(rep.gamma[q][m]);
      rep.basis_evaluations += n;
    }
    r.push_back(detail::combine(psi, rep.gamma[q]));
  }

  rep.did_reset = st.reset_pending_;
  if (!rep.did_reset) {
    if (st.opt_.beta_rule == BetaRule::fletcher_reeves) {
      if (st.omega_ > 0.0)
        rep.beta = omega / st.omega_;
      else
        rep.did_reset = true;
    } else {
      std::vector<complex> vp = at_samples(st.v_);
      std::vector<complex> rs = at_samples(r);
      complex num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += std::conj(vp[i]) * rs[i];
        den += std::norm(vp[i]);
      }
      if (den > 0.0)
        rep.beta = -num / den;
      else
        rep.did_reset = true;
    }
  }
  for (std::size_t q = 0; q < nq; ++q) {
    if (!rep.did_reset) lut_axpy_inplace(r[q], rep.beta, st.v_[q]);
    st.v_[q] = std::move(r[q]);
  }
  if (rep.did_reset) st.since_reset_ = 0;
  st.reset_pending_ = false;
  st.omega_ = omega;
  rep.omega = omega;
  ++st.k_;

  if (omega < st.opt_.policy.epsilon) {
    rep.skipped = true;
    st.reset_pending_ = true;
    return rep;
  }
  std::vector<complex> vs = at_samples(st.v_);
  double lam = 0.0;
  complex ve = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lam += std::norm(vs[i]);
    ve += std::conj(vs[i]) * err[i];
  }
  if (!(lam > 0.0)) throw breakdown_error("SCG_MUL direction vanished at the samples");
  if (st.opt_.lambda_per_sample) {
    lam *= inv_n;
    ve *= inv_n;
  }
  rep.lambda = lam;
  rep.alpha = st.opt_.step_rule == StepRule::line_search ? ve / lam : complex(omega / lam);
  for (std::size_t q = 0; q < nq; ++q) lut_axpy_inplace(st.u_[q], rep.alpha, st.v_[q]);
  if (++st.since_reset_ >= st.opt_.policy.period) st.reset_pending_ = true;
  return rep;
}

template <class Source, class Probe>
MulState& scg_mul_run(MulState& state, Source&& source, std::size_t iterations, Probe&& probe) {
  for (std::size_t i = 0; i < iterations; ++i) {
    MultiSampleSet s = source();
    MulStepReport rep = scg_mul_step(state, s);
    probe(state.k(), rep, state.u());
  }
  return state;
}

template <class Source>
MulState& scg_mul_run(MulState& state, Source&& source, std::size_t iterations) {
  return scg_mul_run(state, std::forward<Source>(source), iterations,
                     [](std::size_t, const MulStepReport&, const std::vector<LutFunction>&) {});
}

}  // namespace scg
