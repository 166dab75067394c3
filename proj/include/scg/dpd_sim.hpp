#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "scg/basis.hpp"
#include "scg/error.hpp"
#include "scg/function_core.hpp"
#include "scg/random.hpp"
#include "scg/solver_mul.hpp"
#include "scg/stochastic_source.hpp"

namespace scg {

// Memory polynomial y_n = sum_q sum_k c[q][k] x_{n-q} |x_{n-q}|^k, with k counted from 0
// (so c[q][0] is the linear term and c[q][2] the cubic one).
class PaModel {
 public:
  PaModel(std::vector<std::vector<complex>> coeffs, double input_scale = 1.2)
      : coeffs_(std::move(coeffs)), input_scale_(input_scale) {
    if (coeffs_.empty()) throw domain_error("PA model needs at least one tap");
    if (!(input_scale_ > 0.0)) throw domain_error("PA input scale must be positive");
    for (const auto& row : coeffs_)
      for (const auto& c : row)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw domain_error("PA coefficient is not finite");
    if (!monotone()) throw domain_error("PA envelope is not strictly increasing on the operating range");
  }

  std::size_t taps() const noexcept { return coeffs_.size(); }
  const std::vector<std::vector<complex>>& coeffs() const noexcept { return coeffs_; }
  double input_scale() const noexcept { return input_scale_; }

  // Steady-state gain magnitude for a constant-envelope input of amplitude r.
  double envelope(double r) const {
    complex acc = 0.0;
    for (const auto& row : coeffs_)
      for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * std::pow(r, static_cast<double>(k + 1));
    return std::abs(acc);
  }

  bool monotone() const {
    constexpr int steps = 1024;
    double prev = envelope(0.0);
    for (int i = 1; i <= steps; ++i) {
      double cur = envelope(input_scale_ * i / steps);
      if (!(cur > prev)) return false;
      prev = cur;
    }
    return true;
  }

 private:
  std::vector<std::vector<complex>> coeffs_;
  double input_scale_;
};

inline std::vector<complex> pa_apply(const PaModel& pa, std::span<const complex> x) {
  std::vector<complex> y(x.size());
  const auto& c = pa.coeffs();
  for (std::size_t n = 0; n < x.size(); ++n) {
    complex acc = 0.0;
    for (std::size_t q = 0; q < c.size() && q <= n; ++q) {
      complex xq = x[n - q];
      double a = std::abs(xq);
      double p = 1.0;
      for (std::size_t k = 0; k < c[q].size(); ++k) {
        acc += c[q][k] * xq * p;
        p *= a;
      }
    }
    y[n] = acc;
  }
  return y;
}

// Text format: one "q k re im" line per coefficient, q and k starting at 1,
// with k the polynomial order (1 linear, 3 cubic). '#' starts a comment.
inline PaModel parse_pa_model(std::istream& in, double input_scale = 1.2) {
  std::vector<std::vector<complex>> c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    long q, k;
    double re, im;
    if (!(ls >> q)) continue;
    if (!(ls >> k >> re >> im) || q < 1 || k < 1)
      throw config_error("bad PA coefficient on line " + std::to_string(lineno));
    std::string rest;
    if (ls >> rest) throw config_error("trailing text on PA coefficient line " + std::to_string(lineno));
    if (c.size() < static_cast<std::size_t>(q)) c.resize(static_cast<std::size_t>(q));
    auto& row = c[static_cast<std::size_t>(q - 1)];
    if (row.size() < static_cast<std::size_t>(k)) row.resize(static_cast<std::size_t>(k));
    row[static_cast<std::size_t>(k - 1)] = complex(re, im);
  }
  if (c.empty()) throw config_error("PA coefficient file has no entries");
  return PaModel(std::move(c), input_scale);
}

inline PaModel load_pa_model(const std::string& path, double input_scale = 1.2) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open PA coefficient file: " + path);
  return parse_pa_model(f, input_scale);
}

inline PaModel default_pa_model() {
  std::vector<std::vector<complex>> c(3, std::vector<complex>(5));
  c[0][0] = {1.0, 0.05};
  c[0][2] = {-0.35, -0.10};
  c[0][4] = {0.06, 0.02};
  c[1][0] = {0.08, -0.02};
  c[1][2] = {-0.04, 0.02};
  c[2][0] = {0.02, 0.01};
  return PaModel(std::move(c));
}

struct OfdmSpec {
  std::size_t subcarriers = 512;
  std::size_t active = 256;
  std::size_t cp_len = 32;
  double papr_scale = 0.45;
  std::size_t filter_taps = 129;  // 0 disables the shaping filter
  double filter_cutoff = 1.05;    // relative to the occupied band edge
  std::uint64_t seed = 1;

  double band_edge() const { return static_cast<double>(active) / 2.0 / static_cast<double>(subcarriers); }

  void validate() const {
    if (subcarriers < 2 || active < 2 || active > subcarriers - 1 || active % 2 != 0)
      throw config_error("OFDM needs an even active count below the subcarrier count");
    if (!(papr_scale > 0.0)) throw config_error("papr_scale must be positive");
    if (filter_taps != 0 && filter_taps % 2 == 0) throw config_error("filter_taps must be odd");
    if (!(filter_cutoff > 0.0)) throw config_error("filter_cutoff must be positive");
  }
};

// 16QAM on the active subcarriers around DC (DC itself left empty), unitary
// inverse DFT, cyclic prefix, optional windowed-sinc shaping, scaling and
// clipping onto the unit circle.
class OfdmSource {
 public:
  explicit OfdmSource(const OfdmSpec& spec) : spec_(spec), rng_(spec.seed) {
    spec_.validate();
    if (spec_.filter_taps > 0) {
      const std::size_t l = spec_.filter_taps;
      const double fc = spec_.filter_cutoff * spec_.band_edge();
      const double mid = static_cast<double>(l - 1) / 2.0;
      taps_.resize(l);
      for (std::size_t i = 0; i < l; ++i) {
        double t = static_cast<double>(i) - mid;
        double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * 2.0 * fc * t) / (std::numbers::pi * 2.0 * fc * t);
        double ph = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(l - 1);
        double blackman = 0.42 - 0.5 * std::cos(ph) + 0.08 * std::cos(2.0 * ph);
        taps_[i] = 2.0 * fc * sinc * blackman;
      }
    }
  }

  std::vector<complex> next(std::size_t n) {
    const std::size_t need = n + (taps_.empty() ? 0 : taps_.size() - 1);
    std::vector<complex> raw;
    raw.reserve(need + spec_.subcarriers + spec_.cp_len);
    while (raw.size() < need) append_symbol(raw);

    std::vector<complex> x(n);
    if (taps_.empty()) {
      std::copy_n(raw.begin(), n, x.begin());
    } else {
      const std::size_t l = taps_.size();
      for (std::size_t i = 0; i < n; ++i) {
        complex acc = 0.0;
        for (std::size_t t = 0; t < l; ++t) acc += taps_[t] * raw[i + l - 1 - t];
        x[i] = acc;
      }
    }
    for (auto& v : x) {
      v *= spec_.papr_scale;
      double a = std::abs(v);
      if (a > 1.0) {
        v /= a;
        ++clipped_;
      }
    }
    produced_ += n;
    return x;
  }

  std::size_t clipped() const noexcept { return clipped_; }
  std::size_t produced() const noexcept { return produced_; }

 private:
  void append_symbol(std::vector<complex>& out) {
    const std::size_t s = spec_.subcarriers;
    const std::size_t half = spec_.active / 2;
    static constexpr double levels[4] = {-3.0, -1.0, 1.0, 3.0};
    const double norm = 1.0 / std::sqrt(10.0);
    std::vector<complex> freq(s, 0.0);
    auto draw = [&] {
      double re = levels[rng_.next_u64() & 3u] * norm;
      double im = levels[rng_.next_u64() & 3u] * norm;
      return complex(re, im);
    };
    for (std::size_t k = 1; k <= half; ++k) freq[k] = draw();
    for (std::size_t k = s - half; k < s; ++k) freq[k] = draw();
    std::vector<complex> time;
    fft_.inv(time, freq);  // includes the 1/S factor
    const double gain = std::sqrt(static_cast<double>(s));
    for (auto& v : time) v *= gain;
    out.insert(out.end(), time.end() - static_cast<std::ptrdiff_t>(spec_.cp_len), time.end());
    out.insert(out.end(), time.begin(), time.end());
  }

  OfdmSpec spec_;
  Rng rng_;
  std::vector<double> taps_;
  Eigen::FFT<double> fft_;
  std::size_t clipped_ = 0;
  std::size_t produced_ = 0;
};

inline std::vector<complex> ofdm_source(const OfdmSpec& spec, std::size_t n) { return OfdmSource(spec).next(n); }

inline double normalized_residual(std::span<const complex> z, std::span<const complex> p) {
  if (z.size() != p.size()) throw shape_error("residual arrays differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    num += std::norm(z[i] - p[i]);
    den += std::norm(z[i]);
  }
  if (!(den > 0.0)) throw domain_error("normalized residual of a zero signal");
  return std::sqrt(num / den);
}

// Welch estimate with a periodic Hann window. Bins run from -1/2 to 1/2 cycles
// per sample (DC at seg_len/2), in dB relative to the strongest bin.
inline std::vector<double> psd(std::span<const complex> signal, std::size_t seg_len, std::size_t overlap) {
  if (seg_len < 2 || (seg_len & (seg_len - 1)) != 0) throw shape_error("PSD segment length must be a power of two");
  if (overlap >= seg_len) throw shape_error("PSD overlap must be below the segment length");
  if (signal.size() < seg_len) throw shape_error("signal shorter than one PSD segment");
  std::vector<double> win(seg_len);
  for (std::size_t i = 0; i < seg_len; ++i)
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg_len));

  Eigen::FFT<double> fft;
  std::vector<double> acc(seg_len, 0.0);
  std::vector<complex> seg(seg_len), spec;
  const std::size_t hop = seg_len - overlap;
  for (std::size_t start = 0; start + seg_len <= signal.size(); start += hop) {
    for (std::size_t i = 0; i < seg_len; ++i) seg[i] = signal[start + i] * win[i];
    fft.fwd(spec, seg);
    for (std::size_t i = 0; i < seg_len; ++i) acc[i] += std::norm(spec[i]);
  }
  std::vector<double> out(seg_len);
  const double peak = *std::max_element(acc.begin(), acc.end());
  for (std::size_t i = 0; i < seg_len; ++i) {
    double p = acc[(i + seg_len / 2) % seg_len];
    out[i] = peak > 0.0 ? 10.0 * std::log10(std::max(p / peak, 1e-30)) : -300.0;
  }
  return out;
}

inline double psd_frequency(std::size_t bin, std::size_t seg_len) {
  return (static_cast<double>(bin) - static_cast<double>(seg_len / 2)) / static_cast<double>(seg_len);
}

enum class BasisWeight { density, uniform };

struct LoopSchedule {
  std::size_t steps_per_capture = 15;
  std::size_t captures = 14;
  std::size_t n_per_capture = 1280;
  std::size_t density_capture_n = 25600;
  bool reset_each_capture = true;
};

struct LoopConfig {
  std::size_t m = 5;
  std::size_t q = 3;
  std::size_t lut_size = 4096;
  std::size_t histogram_bins = 64;
  BasisWeight weight = BasisWeight::density;
  bool tau_weighted = true;  // orthonormalize under |x|^2 rho(x)
  double feedback_snr_db = 32.0;
  std::size_t psd_samples = 65536;
  std::size_t psd_segment = 1024;
  std::size_t psd_overlap = 512;
  MulOptions mul;
};

struct LoopTelemetry {
  std::vector<double> residual;         // one per SCG iteration, before its update
  std::vector<std::size_t> capture_clips;
  std::vector<std::size_t> capture_samples;
  std::vector<double> frequency;
  std::vector<double> psd_original;
  std::vector<double> psd_no_dpd;
  std::vector<double> psd_with_dpd;
  double feedback_scale = 0.0;
  double peak_drive = 0.0;  // max |PA input| on the final block with DPD
  std::size_t source_clips = 0;
};

namespace detail {

class FeedbackPath {
 public:
  FeedbackPath(double snr_db, std::uint64_t seed) : snr_db_(snr_db), rng_(seed) {}

  // Adds complex white noise at the configured SNR relative to the block power.
  void add_noise(std::vector<complex>& y) {
    if (!std::isfinite(snr_db_)) return;
    double p = 0.0;
    for (const auto& v : y) p += std::norm(v);
    p /= static_cast<double>(y.size());
    const double sd = std::sqrt(p * std::pow(10.0, -snr_db_ / 10.0) / 2.0);
    for (auto& v : y) {
      double re = rng_.normal();
      double im = rng_.normal();
      v += sd * complex(re, im);
    }
  }

 private:
  double snr_db_;
  Rng rng_;
};

inline std::size_t normalize_into_unit_disk(std::vector<complex>& y, double scale) {
  std::size_t clips = 0;
  for (auto& v : y) {
    v /= scale;
    double a = std::abs(v);
    if (a > 1.0) {
      v /= a;
      ++clips;
    }
  }
  return clips;
}

}  // namespace detail

// Indirect learning: the PA output (normalized, with its delays) is the
// function input and the PA input is the target, so the fit is a post-inverse
// that is copied straight into the predistorter slot.
inline LoopTelemetry closed_loop_run(const PaModel& pa, const OfdmSpec& spec, const LoopConfig& cfg,
                                     const LoopSchedule& schedule) {
  if (schedule.steps_per_capture < 1 || schedule.captures < 1 || schedule.n_per_capture < 1 ||
      schedule.density_capture_n < 1)
    throw config_error("loop schedule sizes must be positive");
  LoopTelemetry tel;
  OfdmSource source(spec);
  detail::FeedbackPath feedback(cfg.feedback_snr_db, mix_seed(spec.seed, 1));
  const Grid grid(cfg.lut_size);

  std::vector<complex> x0 = source.next(schedule.density_capture_n);
  std::vector<complex> y0 = pa_apply(pa, x0);
  feedback.add_noise(y0);
  double scale = 0.0;
  for (const auto& v : y0) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0)) throw domain_error("initial capture is all zero");
  tel.feedback_scale = scale;
  detail::normalize_into_unit_disk(y0, scale);

  Density weight = Density::uniform(grid);
  if (cfg.weight == BasisWeight::density) {
    std::vector<double> mag(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) mag[i] = std::min(std::abs(y0[i]), 1.0);
    Density hist = histogram_density(mag, HistogramSpec{cfg.histogram_bins}, grid);
    if (cfg.tau_weighted) {
      std::vector<double> w(grid.size());
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = grid.node(j) * grid.node(j) * hist[j];
      weight = Density::from_weights(grid, std::move(w), DensityKind::histogram);
    } else {
      weight = hist;
    }
  }
  auto psi = std::make_shared<const BasisSet>(orthonormal_polynomials_3term(cfg.m, weight, grid));
  std::vector<TapSpec> taps(cfg.q, TapSpec{identity_injection, psi});
  MulState state(taps, cfg.mul);

  bool live = false;
  for (std::size_t cap = 0; cap < schedule.captures; ++cap) {
    std::vector<complex> x = source.next(schedule.n_per_capture);
    std::vector<complex> z = live ? state.apply(x) : x;
    std::vector<complex> y = pa_apply(pa, z);
    feedback.add_noise(y);
    tel.capture_clips.push_back(detail::normalize_into_unit_disk(y, scale));
    tel.capture_samples.push_back(y.size());
    MultiSampleSet s = MultiSampleSet::from_signal(y, z, cfg.q);
    if (schedule.reset_each_capture) state.request_reset();
    for (std::size_t step = 0; step < schedule.steps_per_capture; ++step) {
      MulStepReport rep = scg_mul_step(state, s);
      tel.residual.push_back(rep.residual);
      if (!rep.skipped) live = true;
    }
  }

  std::vector<complex> xf = source.next(cfg.psd_samples);
  std::vector<complex> pd = live ? state.apply(xf) : xf;
  for (const auto& v : pd) tel.peak_drive = std::max(tel.peak_drive, std::abs(v));
  tel.psd_original = psd(xf, cfg.psd_segment, cfg.psd_overlap);
  tel.psd_no_dpd = psd(pa_apply(pa, xf), cfg.psd_segment, cfg.psd_overlap);
  tel.psd_with_dpd = psd(pa_apply(pa, pd), cfg.psd_segment, cfg.psd_overlap);
  tel.frequency.resize(cfg.psd_segment);
  for (std::size_t i = 0; i < cfg.psd_segment; ++i) tel.frequency[i] = psd_frequency(i, cfg.psd_segment);
  tel.source_clips = source.clipped();
  return tel;
}

}  // namespace scg
