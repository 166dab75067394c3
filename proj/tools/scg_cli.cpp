#include <algorithm>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scg/experiment.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_config = 2;

scg::ExperimentConfig prepare(const std::string& path, const std::vector<std::string>& overrides, const std::string& seed) {
  scg::ExperimentConfig cfg = scg::load_config(path);
  for (const auto& o : overrides) scg::apply_override(cfg, o);
  if (!seed.empty()) scg::apply_setting(cfg, "experiment.seed", seed);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic conjugate gradient experiments"};
  app.require_subcommand(1);

  std::string config, out_dir, golden_dir, seed;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "run an experiment and write its CSV files");
  run->add_option("--config", config, "experiment config (INI)")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "override experiment.seed");
  run->add_option("--override", overrides, "section.key=value, repeatable");

  auto* verify = app.add_subcommand("verify", "rerun an experiment and compare with golden CSV files byte for byte");
  verify->add_option("--config", config, "experiment config (INI)")->required();
  verify->add_option("--golden", golden_dir, "directory holding the golden files")->required();
  verify->add_option("--seed", seed, "override experiment.seed");
  verify->add_option("--override", overrides, "section.key=value, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    scg::ExperimentConfig cfg = prepare(config, overrides, seed);
    scg::RunOutput output = scg::run_experiment(cfg);
    if (*run) {
      scg::write_output(output, out_dir);
      for (const auto& [name, table] : output) std::printf("wrote %s/%s (%zu rows)\n", out_dir.c_str(), name.c_str(), table.rows.size());
      return exit_ok;
    }
    auto bad = scg::compare_with_golden(output, golden_dir);
    for (const auto& [name, table] : output) {
      bool mismatch = std::find(bad.begin(), bad.end(), name) != bad.end();
      std::printf("%s %s\n", mismatch ? "MISMATCH" : "match   ", name.c_str());
    }
    return bad.empty() ? exit_ok : exit_failed;
  } catch (const scg::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const scg::io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_failed;
  }
}
