#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "scg/basis.hpp"
#include "scg/error.hpp"
#include "scg/function_core.hpp"

namespace scg {

struct ResetPolicy {
  std::size_t period = 0;  // 0 means "use the basis size"
  double epsilon = 1e-12;
};

struct StepReport {
  std::vector<complex> gamma;
  complex beta = 0.0;
  complex alpha = 0.0;
  double vv = 0.0;
  bool did_reset = false;
  bool skipped = false;
  std::size_t basis_evaluations = 0;
};

class ScgState {
 public:
  ScgState(std::shared_ptr<const BasisSet> basis, ResetPolicy policy = {})
      : basis_(std::move(basis)), policy_(policy), u_(basis_->grid()), v_(basis_->grid()) {
    if (policy_.period == 0) policy_.period = basis_->size();
    if (policy_.period < 1 || policy_.period > basis_->size())
      throw domain_error("reset period must lie in [1, M]");
    if (!(policy_.epsilon > 0.0)) throw domain_error("reset threshold must be positive");
  }

  const BasisSet& basis() const noexcept { return *basis_; }
  const ResetPolicy& policy() const noexcept { return policy_; }
  const LutFunction& u() const noexcept { return u_; }
  const LutFunction& v() const noexcept { return v_; }
  std::size_t k() const noexcept { return k_; }
  bool reset_pending() const noexcept { return reset_pending_; }
  void request_reset() noexcept { reset_pending_ = true; }

 private:
  template <class Measure>
  friend StepReport scg_step_with(ScgState&, Measure&);

  std::shared_ptr<const BasisSet> basis_;
  ResetPolicy policy_;
  LutFunction u_;
  LutFunction v_;
  std::size_t k_ = 0;
  std::size_t since_reset_ = 0;
  bool reset_pending_ = true;
};

namespace detail {

// Inner products against one step's samples. Grid indices of the samples are
// resolved once so every later product costs O(N).
class SampleMeasure {
 public:
  SampleMeasure(const SampleSet& s, const Grid& grid) : s_(s) {
    if (s.size() == 0) throw empty_sample_error("SCG step on an empty sample set");
    if (s.z.size() != s.y.size()) throw shape_error("sample arrays differ in length");
    idx_.resize(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) idx_[n] = grid.index_of(s.y[n]);
  }

  std::vector<complex> project(const BasisSet& basis, const LutFunction& u, std::size_t& evaluations) {
    const std::size_t n = idx_.size();
    err_.resize(n);
    for (std::size_t i = 0; i < n; ++i) err_[i] = s_.z[i] - u[idx_[i]];
    std::vector<complex> gamma(basis.size());
    for (std::size_t m = 0; m < basis.size(); ++m) {
      const auto phi = basis[m].values();
      complex acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += std::conj(phi[idx_[i]]) * err_[i];
      gamma[m] = acc / static_cast<double>(n);
      evaluations += n;
    }
    return gamma;
  }

  complex dot(const LutFunction& a, const LutFunction& b) const {
    complex acc = 0.0;
    for (std::size_t j : idx_) acc += std::conj(a[j]) * b[j];
    return acc / static_cast<double>(idx_.size());
  }

  // <v, g - u> with the error cached by project().
  complex dot_error(const LutFunction& v) const {
    complex acc = 0.0;
    for (std::size_t i = 0; i < idx_.size(); ++i) acc += std::conj(v[idx_[i]]) * err_[i];
    return acc / static_cast<double>(idx_.size());
  }

 private:
  const SampleSet& s_;
  std::vector<std::size_t> idx_;
  std::vector<complex> err_;
};

class ExactMeasure {
 public:
  ExactMeasure(const LutFunction& g, const Density& rho) : g_(g), rho_(rho), err_(g.grid()) {}

  std::vector<complex> project(const BasisSet& basis, const LutFunction& u, std::size_t& evaluations) {
    err_ = lut_axpy(g_, -1.0, u);
    std::vector<complex> gamma(basis.size());
    for (std::size_t m = 0; m < basis.size(); ++m) {
      gamma[m] = inner_exact(basis[m], err_, rho_);
      evaluations += g_.size();
    }
    return gamma;
  }

  complex dot(const LutFunction& a, const LutFunction& b) const { return inner_exact(a, b, rho_); }
  complex dot_error(const LutFunction& v) const { return inner_exact(v, err_, rho_); }

 private:
  const LutFunction& g_;
  const Density& rho_;
  LutFunction err_;
};

inline LutFunction combine(const BasisSet& basis, const std::vector<complex>& coef) {
  LutFunction r(basis.grid());
  for (std::size_t m = 0; m < basis.size(); ++m) lut_axpy_inplace(r, coef[m], basis[m]);
  return r;
}

}  // namespace detail

template <class Measure>
StepReport scg_step_with(ScgState& st, Measure& measure) {
  StepReport rep;
  const BasisSet& basis = *st.basis_;
  rep.gamma = measure.project(basis, st.u_, rep.basis_evaluations);
  LutFunction r = detail::combine(basis, rep.gamma);

  rep.did_reset = st.reset_pending_;
  if (!rep.did_reset) {
    double pp = measure.dot(st.v_, st.v_).real();
    if (pp > 0.0)
      rep.beta = -measure.dot(st.v_, r) / pp;
    else
      rep.did_reset = true;
  }
  if (rep.did_reset) {
    st.v_ = std::move(r);
    st.since_reset_ = 0;
  } else {
    lut_axpy_inplace(r, rep.beta, st.v_);
    st.v_ = std::move(r);
  }
  st.reset_pending_ = false;

  rep.vv = measure.dot(st.v_, st.v_).real();
  ++st.k_;
  if (rep.vv < st.policy_.epsilon) {
    rep.skipped = true;
    st.reset_pending_ = true;
    return rep;
  }
  // Exact line search along v in this step's inner product.
  rep.alpha = measure.dot_error(st.v_) / rep.vv;
  lut_axpy_inplace(st.u_, rep.alpha, st.v_);
  if (++st.since_reset_ >= st.policy_.period) st.reset_pending_ = true;
  return rep;
}

inline StepReport scg_step(ScgState& state, const SampleSet& s) {
  detail::SampleMeasure measure(s, state.basis().grid());
  return scg_step_with(state, measure);
}

// Same step with the exact weighted inner product in place of the sample average.
inline StepReport scg_step_exact(ScgState& state, const LutFunction& g, const Density& rho) {
  detail::ExactMeasure measure(g, rho);
  return scg_step_with(state, measure);
}

template <class Source, class Probe>
ScgState& scg_run(ScgState& state, Source&& source, std::size_t iterations, Probe&& probe) {
  for (std::size_t i = 0; i < iterations; ++i) {
    SampleSet s = source();
    StepReport rep = scg_step(state, s);
    probe(state.k(), rep, state.u());
  }
  return state;
}

template <class Source>
ScgState& scg_run(ScgState& state, Source&& source, std::size_t iterations) {
  return scg_run(state, std::forward<Source>(source), iterations, [](std::size_t, const StepReport&, const LutFunction&) {});
}

struct CgResult {
  LutFunction u;
  std::size_t iterations;
  double residual;  // <r, r> at exit
};

// Conjugate gradients on the normal equations, carried out in function space.
inline CgResult cg_solve(const BasisSet& basis, const LutFunction& g, const Density& rho, double tol) {
  require_same_grid(basis.grid(), g.grid());
  require_same_grid(basis.grid(), rho.grid());
  if (!(tol > 0.0)) throw domain_error("tolerance must be positive");
  LutFunction u(basis.grid());
  LutFunction v(basis.grid());
  double rho_prev = 0.0;
  std::size_t it = 0;
  double rr = 0.0;
  for (;;) {
    LutFunction e = lut_axpy(g, -1.0, u);
    std::vector<complex> gamma(basis.size());
    double gg = 0.0;
    for (std::size_t m = 0; m < basis.size(); ++m) {
      gamma[m] = inner_exact(basis[m], e, rho);
      gg += std::norm(gamma[m]);
    }
    LutFunction r = detail::combine(basis, gamma);
    rr = inner_exact(r, r, rho).real();
    if (rr <= tol || it == basis.size()) break;
    // Ratio of squared residual coefficient norms; this is <r,r> when the basis is orthonormal.
    double beta = it == 0 ? 0.0 : gg / rho_prev;
    lut_axpy_inplace(r, beta, v);
    v = std::move(r);
    double vv = inner_exact(v, v, rho).real();
    if (!(vv > 0.0)) throw breakdown_error("CG direction vanished with nonzero residual");
    lut_axpy_inplace(u, gg / vv, v);
    rho_prev = gg;
    ++it;
  }
  return {std::move(u), it, rr};
}

}  // namespace scg
