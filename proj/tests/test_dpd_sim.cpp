#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "scg/dpd_sim.hpp"
#include "scg/stochastic_source.hpp"

using namespace scg;

namespace {

OfdmSpec default_spec(std::uint64_t seed = 1) {
  OfdmSpec s;
  s.seed = seed;
  return s;
}

// sum_b (p_hat - p)^2 / p over 32 bins on [0, 4 sigma_hat] against a fitted Rayleigh law.
double rayleigh_discrepancy(const std::vector<complex>& x) {
  std::vector<double> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = std::abs(x[i]);
  const double s = estimate_sigma(a);
  const int bins = 32;
  const double width = 4.0 * s / bins;
  std::vector<double> counts(bins, 0.0);
  for (double v : a) {
    auto b = static_cast<int>(v / width);
    if (b < bins) counts[b] += 1.0;
  }
  double d = 0.0;
  for (int b = 0; b < bins; ++b) {
    double lo = b * width, hi = (b + 1) * width;
    double p = std::exp(-lo * lo / (2 * s * s)) - std::exp(-hi * hi / (2 * s * s));
    double ph = counts[b] / static_cast<double>(a.size());
    d += (ph - p) * (ph - p) / p;
  }
  return d;
}

PaModel identity_pa() { return PaModel(std::vector<std::vector<complex>>{{complex(1.0)}}); }

LoopConfig quiet_loop() {
  LoopConfig c;
  c.feedback_snr_db = std::numeric_limits<double>::infinity();
  c.psd_samples = 8192;
  return c;
}

}  // namespace

TEST(Ofdm, Deterministic) {
  EXPECT_EQ(ofdm_source(default_spec(5), 3000), ofdm_source(default_spec(5), 3000));
  EXPECT_NE(ofdm_source(default_spec(5), 3000), ofdm_source(default_spec(6), 3000));
}

TEST(Ofdm, MeanPowerMatchesParseval) {
  OfdmSpec spec = default_spec(3);
  auto x = ofdm_source(spec, 1 << 20);
  double p = 0.0;
  for (auto v : x) p += std::norm(v);
  p /= static_cast<double>(x.size());
  // Unit-power 16QAM on `active` of `subcarriers` bins through a unitary transform.
  double expected = spec.papr_scale * spec.papr_scale * static_cast<double>(spec.active) / static_cast<double>(spec.subcarriers);
  EXPECT_NEAR(p / expected, 1.0, 0.02);
}

TEST(Ofdm, MagnitudeIsRayleighLike) {
  // Bound from a Monte Carlo of Gaussian-symbol baseband with the same
  // numerology and 65536 samples: maximum over 300 trials was 9.5e-4.
  for (std::uint64_t seed : {1u, 2u, 3u}) EXPECT_LT(rayleigh_discrepancy(ofdm_source(default_spec(seed), 65536)), 1.2e-3);
}

TEST(Ofdm, ClipsAreRareAndCounted) {
  OfdmSource src(default_spec(9));
  auto x = src.next(1 << 20);
  std::size_t at_unit = 0;
  for (auto v : x) {
    EXPECT_LE(std::abs(v), 1.0 + 1e-12);
    if (std::abs(std::abs(v) - 1.0) < 1e-12) ++at_unit;
  }
  EXPECT_EQ(src.clipped(), at_unit);
  EXPECT_LE(static_cast<double>(src.clipped()), 1e-4 * static_cast<double>(x.size()));
}

TEST(Ofdm, UnfilteredSymbolCarriesCyclicPrefix) {
  OfdmSpec spec = default_spec(2);
  spec.filter_taps = 0;
  spec.papr_scale = 0.1;
  auto x = ofdm_source(spec, spec.subcarriers + spec.cp_len);
  for (std::size_t i = 0; i < spec.cp_len; ++i) EXPECT_NEAR(std::abs(x[i] - x[i + spec.subcarriers]), 0.0, 1e-15);
}

TEST(Ofdm, RejectsBadSpec) {
  OfdmSpec s;
  s.active = 600;
  EXPECT_THROW(OfdmSource{s}, config_error);
  s = OfdmSpec{};
  s.filter_taps = 64;
  EXPECT_THROW(OfdmSource{s}, config_error);
}

TEST(PaModel, IdentityPassesThrough) {
  PaModel pa = identity_pa();
  auto x = ofdm_source(default_spec(), 500);
  EXPECT_EQ(pa_apply(pa, x), x);
}

TEST(PaModel, SmallSignalToneSeesLinearGain) {
  PaModel pa = default_pa_model();
  const double w = 2.0 * M_PI * 0.05;
  std::vector<complex> x(400);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = 0.01 * std::polar(1.0, w * static_cast<double>(n));
  complex h = 0.0;
  for (std::size_t q = 0; q < pa.taps(); ++q) h += pa.coeffs()[q][0] * std::polar(1.0, -w * static_cast<double>(q));
  auto y = pa_apply(pa, x);
  for (std::size_t n = pa.taps(); n < x.size(); ++n) EXPECT_LE(std::abs(y[n] - h * x[n]), 0.01 * std::abs(h * x[n]));
}

TEST(PaModel, MemorylessCubicOnConstantEnvelope) {
  complex c1(0.9, 0.1), c3(-0.2, 0.05);
  PaModel pa({{c1, 0.0, c3}});
  const double r = 0.7;
  std::vector<complex> x(64);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::polar(r, 0.3 * static_cast<double>(n));
  auto y = pa_apply(pa, x);
  for (std::size_t n = 0; n < x.size(); ++n) EXPECT_LE(std::abs(y[n] - (c1 + c3 * r * r) * x[n]), 1e-15);
}

TEST(PaModel, RejectsNonMonotoneEnvelope) {
  EXPECT_THROW(PaModel({{1.0, 0.0, -1.0}}, 1.0), domain_error);  // r - r^3 peaks at 0.577
  EXPECT_NO_THROW(PaModel({{1.0, 0.0, -1.0}}, 0.5));
  EXPECT_THROW(PaModel(std::vector<std::vector<complex>>{}), domain_error);
}

TEST(PaModel, CoefficientFileMatchesBuiltInDefault) {
  PaModel file = load_pa_model(std::string(SCG_SOURCE_DIR) + "/data/pa_default.txt");
  PaModel def = default_pa_model();
  ASSERT_EQ(file.taps(), def.taps());
  for (std::size_t q = 0; q < def.taps(); ++q)
    for (std::size_t k = 0; k < def.coeffs()[q].size(); ++k) {
      complex a = k < file.coeffs()[q].size() ? file.coeffs()[q][k] : complex(0.0);
      EXPECT_EQ(a, def.coeffs()[q][k]);
    }
}

TEST(PaModel, ParseErrors) {
  std::istringstream bad("1 1 1.0\n");
  EXPECT_THROW(parse_pa_model(bad), config_error);
  std::istringstream zero("0 1 1.0 0.0\n");
  EXPECT_THROW(parse_pa_model(zero), config_error);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(parse_pa_model(empty), config_error);
  EXPECT_THROW(load_pa_model("/nonexistent/pa.txt"), io_error);
}

TEST(NormalizedResidual, Examples) {
  std::vector<complex> z = {1.0, complex(0, 2), -3.0};
  std::vector<complex> zero(3), twice = {2.0, complex(0, 4), -6.0};
  EXPECT_EQ(normalized_residual(z, z), 0.0);
  EXPECT_DOUBLE_EQ(normalized_residual(z, zero), 1.0);
  EXPECT_DOUBLE_EQ(normalized_residual(z, twice), 1.0);
  EXPECT_THROW(normalized_residual(zero, z), domain_error);
  EXPECT_THROW(normalized_residual(z, std::vector<complex>(2)), shape_error);
}

TEST(Psd, ToneLeakage) {
  const std::size_t seg = 1024, bin = 100;
  std::vector<complex> x(16 * seg);
  for (std::size_t n = 0; n < x.size(); ++n)
    x[n] = std::polar(1.0, 2.0 * M_PI * static_cast<double>(bin) * static_cast<double>(n) / seg);
  auto p = psd(x, seg, seg / 2);
  const std::size_t peak = bin + seg / 2;
  EXPECT_EQ(p[peak], 0.0);
  for (std::size_t i = 0; i < seg; ++i) {
    std::size_t d = i > peak ? i - peak : peak - i;
    if (d >= 3) {
      EXPECT_LE(p[i], -50.0) << i;
    }
  }
  EXPECT_NEAR(psd_frequency(peak, seg), 100.0 / 1024.0, 1e-15);
}

TEST(Psd, WhiteNoiseIsFlat) {
  Rng rng(3);
  std::vector<complex> x(65536);
  for (auto& v : x) {
    double re = rng.normal();
    v = complex(re, rng.normal());
  }
  auto p = psd(x, 1024, 512);  // 127 segments
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  for (double v : p) EXPECT_LE(std::abs(v - mean), 3.0);
}

TEST(Psd, ScaleInvariant) {
  auto x = ofdm_source(default_spec(4), 8192);
  auto y = x;
  for (auto& v : y) v *= complex(3.0, -1.0);
  auto a = psd(x, 512, 256), b = psd(y, 512, 256);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Psd, Errors) {
  std::vector<complex> x(100);
  EXPECT_THROW(psd(x, 128, 0), shape_error);
  EXPECT_THROW(psd(x, 48, 0), shape_error);
  EXPECT_THROW(psd(x, 64, 64), shape_error);
}

TEST(ClosedLoop, IdentityPlantIsLearnedExactly) {
  LoopSchedule sched;
  sched.captures = 3;
  sched.density_capture_n = 4096;
  LoopConfig cfg = quiet_loop();
  cfg.mul.policy.epsilon = 1e-40;
  auto tel = closed_loop_run(identity_pa(), default_spec(), cfg, sched);
  ASSERT_EQ(tel.residual.size(), 45u);
  // The first capture holds a clipped sample, so only later captures have an exact fit.
  EXPECT_EQ(tel.capture_clips[1], 0u);
  EXPECT_LE(tel.residual[15], 1e-3);
  for (std::size_t i = 30; i < tel.residual.size(); ++i) EXPECT_LE(tel.residual[i], 1e-9) << i;
}

TEST(ClosedLoop, ResidualNonIncreasingWithinCaptures) {
  LoopSchedule sched;
  sched.captures = 6;
  LoopConfig cfg;
  cfg.psd_samples = 8192;
  auto tel = closed_loop_run(default_pa_model(), default_spec(2), cfg, sched);
  ASSERT_EQ(tel.residual.size(), 90u);
  EXPECT_EQ(tel.capture_samples, std::vector<std::size_t>(6, 1280));
  for (std::size_t i = 1; i < tel.residual.size(); ++i)
    if (i % 15 != 0) {
      EXPECT_LE(tel.residual[i], tel.residual[i - 1] + 1e-9) << i;
    }
  for (double r : tel.residual) EXPECT_GE(r, 0.0);
}

TEST(ClosedLoop, Deterministic) {
  LoopSchedule sched;
  sched.steps_per_capture = 1;
  sched.captures = 20;
  sched.reset_each_capture = false;
  LoopConfig cfg;
  cfg.psd_samples = 4096;
  auto a = closed_loop_run(default_pa_model(), default_spec(7), cfg, sched);
  auto b = closed_loop_run(default_pa_model(), default_spec(7), cfg, sched);
  EXPECT_EQ(a.residual, b.residual);
  EXPECT_EQ(a.psd_with_dpd, b.psd_with_dpd);
  EXPECT_EQ(a.capture_clips, b.capture_clips);
}

TEST(ClosedLoop, RejectsEmptySchedule) {
  LoopSchedule sched;
  sched.captures = 0;
  EXPECT_THROW(closed_loop_run(default_pa_model(), default_spec(), quiet_loop(), sched), config_error);
}
