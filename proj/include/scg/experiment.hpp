#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "scg/basis.hpp"
#include "scg/diagnostics.hpp"
#include "scg/dpd_sim.hpp"
#include "scg/error.hpp"
#include "scg/function_core.hpp"
#include "scg/solver_uni.hpp"
#include "scg/stochastic_source.hpp"

namespace scg {

enum class ExperimentKind { sine_fit, dpd };
enum class DensityChoice { uniform, rayleigh, histogram };
enum class BasisChoice { monomial, gs, three_term };
enum class SimVariant { sim1, sim2, sim3 };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::sine_fit;
  std::uint64_t seed = 1;

  std::size_t m = 10;
  std::size_t b = 65536;
  std::size_t n = 500;
  std::size_t iterations = 100;
  std::size_t reset_period = 0;  // 0: one reset every M (or QM) steps
  double epsilon = 1e-12;
  DensityChoice density = DensityChoice::uniform;
  double sigma = 0.0;  // 0: estimate from a pilot capture
  BasisChoice basis = BasisChoice::three_term;
  BetaRule beta_rule = BetaRule::orthogonalizing;
  StepRule step_rule = StepRule::line_search;
  bool lambda_per_sample = true;

  double mean = 0.25;
  double variance = 0.0625;
  std::size_t mse_points = 1000;
  std::size_t histogram_bins = 64;
  std::size_t pilot_n = 25600;

  std::size_t q = 3;
  SimVariant sim_variant = SimVariant::sim1;
  std::string pa_file;  // empty: built-in default model
  double pa_input_scale = 1.2;
  double feedback_snr_db = 32.0;
  bool tau_weighted = true;
  std::size_t psd_samples = 65536;
  std::size_t psd_segment = 1024;
  std::size_t psd_overlap = 512;
  OfdmSpec ofdm;

  std::size_t steps_per_capture() const { return sim_variant == SimVariant::sim1 ? m * q : 1; }
  std::size_t captures() const { return iterations / steps_per_capture(); }
  void validate() const;
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw config_error(key + ": cannot parse '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw config_error(key + ": expected true or false, got '" + text + "'");
}

template <class E>
E parse_enum(const std::string& key, const std::string& text, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [name, value] : names)
    if (text == name) return value;
  std::string allowed;
  for (const auto& [name, value] : names) allowed += std::string(allowed.empty() ? "" : ", ") + name;
  throw config_error(key + ": '" + text + "' is not one of " + allowed);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class T>
Setter number(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

template <class T>
Setter ofdm_number(T OfdmSpec::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.ofdm.*field = parse_number<T>(k, v); };
}

inline Setter flag(bool ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_bool(k, v); };
}

inline const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = {
      {"experiment.type",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.experiment = parse_enum<ExperimentKind>(k, v, {{"sine_fit", ExperimentKind::sine_fit}, {"dpd", ExperimentKind::dpd}});
       }},
      {"experiment.seed", number(&ExperimentConfig::seed)},
      {"solver.M", number(&ExperimentConfig::m)},
      {"solver.B", number(&ExperimentConfig::b)},
      {"solver.N", number(&ExperimentConfig::n)},
      {"solver.iterations", number(&ExperimentConfig::iterations)},
      {"solver.reset_period", number(&ExperimentConfig::reset_period)},
      {"solver.epsilon", number(&ExperimentConfig::epsilon)},
      {"solver.density",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.density = parse_enum<DensityChoice>(
             k, v, {{"uniform", DensityChoice::uniform}, {"rayleigh", DensityChoice::rayleigh}, {"histogram", DensityChoice::histogram}});
       }},
      {"solver.sigma", number(&ExperimentConfig::sigma)},
      {"solver.basis",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.basis = parse_enum<BasisChoice>(
             k, v, {{"monomial", BasisChoice::monomial}, {"gs", BasisChoice::gs}, {"three_term", BasisChoice::three_term}});
       }},
      {"solver.beta_rule",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.beta_rule = parse_enum<BetaRule>(
             k, v, {{"orthogonalizing", BetaRule::orthogonalizing}, {"fletcher_reeves", BetaRule::fletcher_reeves}});
       }},
      {"solver.step_rule",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.step_rule = parse_enum<StepRule>(
             k, v, {{"line_search", StepRule::line_search}, {"omega_over_lambda", StepRule::omega_over_lambda}});
       }},
      {"solver.lambda_per_sample", flag(&ExperimentConfig::lambda_per_sample)},
      {"sampling.mean", number(&ExperimentConfig::mean)},
      {"sampling.variance", number(&ExperimentConfig::variance)},
      {"sampling.mse_points", number(&ExperimentConfig::mse_points)},
      {"sampling.histogram_bins", number(&ExperimentConfig::histogram_bins)},
      {"sampling.pilot_n", number(&ExperimentConfig::pilot_n)},
      {"dpd.Q", number(&ExperimentConfig::q)},
      {"dpd.sim_variant",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.sim_variant = parse_enum<SimVariant>(k, v, {{"sim1", SimVariant::sim1}, {"sim2", SimVariant::sim2}, {"sim3", SimVariant::sim3}});
       }},
      {"dpd.pa_file", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.pa_file = v; }},
      {"dpd.pa_input_scale", number(&ExperimentConfig::pa_input_scale)},
      {"dpd.feedback_snr_db", number(&ExperimentConfig::feedback_snr_db)},
      {"dpd.tau_weighted", flag(&ExperimentConfig::tau_weighted)},
      {"dpd.psd_samples", number(&ExperimentConfig::psd_samples)},
      {"dpd.psd_segment", number(&ExperimentConfig::psd_segment)},
      {"dpd.psd_overlap", number(&ExperimentConfig::psd_overlap)},
      {"ofdm.subcarriers", ofdm_number(&OfdmSpec::subcarriers)},
      {"ofdm.active", ofdm_number(&OfdmSpec::active)},
      {"ofdm.cp_len", ofdm_number(&OfdmSpec::cp_len)},
      {"ofdm.papr_scale", ofdm_number(&OfdmSpec::papr_scale)},
      {"ofdm.filter_taps", ofdm_number(&OfdmSpec::filter_taps)},
      {"ofdm.filter_cutoff", ofdm_number(&OfdmSpec::filter_cutoff)},
  };
  return keys;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw config_error(std::string(name) + " must be positive");
  };
  positive(m, "solver.M");
  positive(n, "solver.N");
  positive(iterations, "solver.iterations");
  positive(mse_points, "sampling.mse_points");
  positive(q, "dpd.Q");
  if (b < 2) throw config_error("solver.B must be at least 2");
  if (m > 64) throw config_error("solver.M above 64 is not supported");
  if (!(epsilon > 0.0)) throw config_error("solver.epsilon must be positive");
  if (!(variance > 0.0)) throw config_error("sampling.variance must be positive");
  if (sigma < 0.0) throw config_error("solver.sigma must be nonnegative");
  if (histogram_bins < 2) throw config_error("sampling.histogram_bins must be at least 2");
  if (mse_points < 2) throw config_error("sampling.mse_points must be at least 2");
  const std::size_t dim = experiment == ExperimentKind::dpd ? m * q : m;
  if (reset_period > dim) throw config_error("solver.reset_period exceeds the search space dimension");
  if (experiment == ExperimentKind::dpd) {
    ofdm.validate();
    if (iterations % steps_per_capture() != 0)
      throw config_error("solver.iterations must be a multiple of the steps per capture");
    positive(pilot_n, "sampling.pilot_n");
    if (psd_segment > psd_samples) throw config_error("dpd.psd_segment exceeds dpd.psd_samples");
    if (psd_overlap >= psd_segment) throw config_error("dpd.psd_overlap must be below dpd.psd_segment");
  }
}

// Applies "section.key=value" on top of a config.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& keys = detail::config_keys();
  auto it = keys.find(key);
  if (it == keys.end()) throw config_error("unknown config key: " + key);
  it->second(cfg, key, value);
}

inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw config_error("override must look like section.key=value: " + assignment);
  auto trim = [](std::string s) {
    const char* ws = " \t";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
  };
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

// Relative pa_file paths resolve against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw config_error("config entry outside a section: " + section);
    for (const auto& [key, node] : body) apply_setting(cfg, section + "." + key, node.get_value<std::string>());
  }
  if (!cfg.pa_file.empty() && std::filesystem::path(cfg.pa_file).is_relative())
    cfg.pa_file = (base_dir / cfg.pa_file).lexically_normal().string();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open config: " + path.string());
  return parse_config(f, path.parent_path());
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw shape_error("CSV row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline void emit_csv(const CsvTable& t, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot write " + path.string());
  const std::string text = to_csv(t);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw io_error("write failed for " + path.string());
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      auto c = s.find(',', start);
      parts.push_back(s.substr(start, c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    return parts;
  };
  if (!std::getline(in, line)) return t;
  t.columns = split(line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(detail::parse_number<double>("csv", cell));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

// Named output tables of one run, e.g. {"trace.csv", ...}.
using RunOutput = std::vector<std::pair<std::string, CsvTable>>;

inline double sine_reference(double t) { return std::sin(2.0 * std::numbers::pi * t); }

inline std::shared_ptr<const BasisSet> build_basis(const ExperimentConfig& cfg, const Density& weight) {
  const Grid grid(cfg.b);
  switch (cfg.basis) {
    case BasisChoice::monomial:
      return std::make_shared<const BasisSet>(monomial_basis(cfg.m, grid));
    case BasisChoice::gs:
      return std::make_shared<const BasisSet>(gram_schmidt(monomial_basis(cfg.m, grid), weight));
    case BasisChoice::three_term:
      break;
  }
  return std::make_shared<const BasisSet>(orthonormal_polynomials_3term(cfg.m, weight, grid));
}

// Weight for basis construction. Estimated choices use a pilot capture from a
// separate stream so the solver's sample sequence is unaffected.
inline Density sine_fit_weight(const ExperimentConfig& cfg) {
  const Grid grid(cfg.b);
  if (cfg.density == DensityChoice::uniform) return Density::uniform(grid);
  std::vector<double> pilot;
  if (cfg.density == DensityChoice::histogram || cfg.sigma == 0.0)
    pilot = rayleigh_samples(RayleighSpec{cfg.mean, cfg.variance, mix_seed(cfg.seed, 7)}, cfg.pilot_n);
  if (cfg.density == DensityChoice::histogram) return histogram_density(pilot, HistogramSpec{cfg.histogram_bins}, grid);
  return rayleigh_density(cfg.sigma > 0.0 ? cfg.sigma : estimate_sigma(pilot), grid);
}

// Per-iteration callback for instrumented runs: (k, report, u_before, u_after, samples).
using SineProbe = std::function<void(std::size_t, const StepReport&, const LutFunction&, const LutFunction&, const SampleSet&)>;

inline RunOutput run_sine_fit(const ExperimentConfig& cfg, const SineProbe& probe = {}) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::sine_fit) throw config_error("experiment.type is not sine_fit");
  const Density weight = sine_fit_weight(cfg);
  auto basis = build_basis(cfg, weight);
  ScgState state(basis, ResetPolicy{cfg.reset_period, cfg.epsilon});
  RayleighSource source(RayleighSpec{cfg.mean, cfg.variance, cfg.seed});

  CsvTable trace{{"k", "N", "H"}, {}};
  trace.rows.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    SampleSet s;
    s.y = source.next(cfg.n);
    s.z.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) s.z[i] = sine_reference(s.y[i]);
    LutFunction before = probe ? state.u() : LutFunction(basis->grid());
    StepReport rep = scg_step(state, s);
    if (probe) probe(state.k(), rep, before, state.u(), s);
    trace.rows.push_back({static_cast<double>(state.k()), static_cast<double>(cfg.n),
                          mse_uniform(state.u(), sine_reference, cfg.mse_points)});
  }
  return {{"trace.csv", std::move(trace)}};
}

inline LoopConfig loop_config(const ExperimentConfig& cfg) {
  LoopConfig lc;
  lc.m = cfg.m;
  lc.q = cfg.q;
  lc.lut_size = cfg.b;
  lc.histogram_bins = cfg.histogram_bins;
  lc.weight = cfg.sim_variant == SimVariant::sim3 ? BasisWeight::uniform : BasisWeight::density;
  lc.tau_weighted = cfg.tau_weighted;
  lc.feedback_snr_db = cfg.feedback_snr_db;
  lc.psd_samples = cfg.psd_samples;
  lc.psd_segment = cfg.psd_segment;
  lc.psd_overlap = cfg.psd_overlap;
  lc.mul.policy = ResetPolicy{cfg.reset_period, cfg.epsilon};
  lc.mul.beta_rule = cfg.beta_rule;
  lc.mul.step_rule = cfg.step_rule;
  lc.mul.lambda_per_sample = cfg.lambda_per_sample;
  return lc;
}

inline LoopSchedule loop_schedule(const ExperimentConfig& cfg) {
  LoopSchedule s;
  s.steps_per_capture = cfg.steps_per_capture();
  s.captures = cfg.captures();
  s.n_per_capture = cfg.n;
  s.density_capture_n = cfg.pilot_n;
  s.reset_each_capture = s.steps_per_capture > 1;
  return s;
}

inline LoopTelemetry run_dpd_telemetry(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment != ExperimentKind::dpd) throw config_error("experiment.type is not dpd");
  PaModel pa = cfg.pa_file.empty() ? default_pa_model() : load_pa_model(cfg.pa_file, cfg.pa_input_scale);
  OfdmSpec spec = cfg.ofdm;
  spec.seed = cfg.seed;
  return closed_loop_run(pa, spec, loop_config(cfg), loop_schedule(cfg));
}

inline RunOutput dpd_tables(const ExperimentConfig& cfg, const LoopTelemetry& tel) {
  CsvTable trace{{"k", "capture", "residual"}, {}};
  const std::size_t spc = cfg.steps_per_capture();
  for (std::size_t i = 0; i < tel.residual.size(); ++i)
    trace.rows.push_back({static_cast<double>(i + 1), static_cast<double>(i / spc + 1), tel.residual[i]});
  auto spectrum = [&](const std::vector<double>& p) {
    CsvTable t{{"bin", "frequency", "power_db"}, {}};
    for (std::size_t i = 0; i < p.size(); ++i) t.rows.push_back({static_cast<double>(i), tel.frequency[i], p[i]});
    return t;
  };
  return {{"trace.csv", std::move(trace)},
          {"psd_original.csv", spectrum(tel.psd_original)},
          {"psd_no_dpd.csv", spectrum(tel.psd_no_dpd)},
          {"psd_with_dpd.csv", spectrum(tel.psd_with_dpd)}};
}

inline RunOutput run_dpd(const ExperimentConfig& cfg) { return dpd_tables(cfg, run_dpd_telemetry(cfg)); }

inline RunOutput run_experiment(const ExperimentConfig& cfg) {
  return cfg.experiment == ExperimentKind::dpd ? run_dpd(cfg) : run_sine_fit(cfg);
}

inline void write_output(const RunOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, table] : out) emit_csv(table, dir / name);
}

// Byte comparison against stored files; returns the names that differ.
inline std::vector<std::string> compare_with_golden(const RunOutput& out, const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& [name, table] : out) {
    std::ifstream f(dir / name, std::ios::binary);
    std::stringstream ss;
    if (f) ss << f.rdbuf();
    if (!f || ss.str() != to_csv(table)) bad.push_back(name);
  }
  return bad;
}

}  // namespace scg
