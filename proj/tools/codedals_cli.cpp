#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "codedals/analysis.hpp"
#include "codedals/error.hpp"
#include "codedals/matrix_io.hpp"
#include "harness/config.hpp"
#include "harness/experiments.hpp"

namespace fs = std::filesystem;
using namespace codedals;

namespace {

struct CommonArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::string sweep;
};

void add_config_options(CLI::App* cmd, CommonArgs& args) {
  cmd->set_help_flag("--help", "print help");
  cmd->add_option("--config", args.config_path, "key=value config file");
  for (const auto& key : harness::ExperimentConfig::keys()) {
    if (key == "output_dir") continue;
    cmd->add_option("--" + key, args.overrides[key], "override " + key);
  }
  cmd->add_option("--out", args.overrides["output_dir"], "output directory");
  cmd->add_option("--sweep", args.sweep, "sweep axes, e.g. h=2,3,4;k=10,20");
}

harness::ExperimentConfig resolve(const CLI::App* cmd, const CommonArgs& args) {
  harness::ExperimentConfig config;
  if (!args.config_path.empty()) config = harness::load_config(args.config_path);
  for (const auto& key : harness::ExperimentConfig::keys()) {
    const std::string flag = key == "output_dir" ? "--out" : "--" + key;
    if (cmd->count(flag) > 0) config.set(key, args.overrides.at(key));
  }
  if (cmd->count("--sweep") > 0) config.set_sweep(args.sweep);
  config.validate();
  return config;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

fs::path output_dir(const harness::ExperimentConfig& config) {
  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  return dir;
}

int cmd_factorize(const harness::ExperimentConfig& base, const std::string& input) {
  harness::ExperimentConfig config = base;
  harness::FactorizationReport report = [&] {
    if (input.empty()) return harness::run_factorization(config);
    const Matrix R = load_matrix(input);
    config.m = R.rows();
    config.n = R.cols();
    return harness::run_factorization(config, R);
  }();
  const fs::path dir = output_dir(config);
  const std::string text = harness::render_report(report);
  open_output(dir / "report.txt") << text;
  {
    auto out = open_output(dir / "loss.csv");
    harness::write_loss_csv(out, report.coded.loss_history);
  }
  {
    auto out = open_output(dir / "baseline_loss.csv");
    harness::write_loss_csv(out, report.baseline.loss_history);
  }
  {
    auto out = open_output(dir / "trace.csv");
    cluster::write_trace_csv(out, report.traces);
  }
  save_matrix(dir / "U.csv", report.coded.U);
  save_matrix(dir / "V.csv", report.coded.V);
  std::cout << text;
  if (!report.agrees()) {
    std::cerr << fmt::format("coded and baseline final losses differ by {:.3e} (limit {:.0e})\n",
                             report.relative_difference, report.kAgreementTol);
    return 1;
  }
  return 0;
}

int cmd_sweep(const harness::ExperimentConfig& config) {
  const auto table = harness::run_sweep(config);
  const fs::path dir = output_dir(config);
  {
    auto out = open_output(dir / "sweep.csv");
    harness::write_sweep_csv(out, table);
  }
  const std::string text = harness::render_sweep_table(table);
  open_output(dir / "sweep_table.txt") << text;
  std::cout << text;
  return 0;
}

int cmd_analyze(const harness::ExperimentConfig& config) {
  const auto n = static_cast<double>(config.n);
  const auto d = static_cast<double>(config.d);
  const auto profile = config.profile();
  fmt::print("W={} s={} optimal_h={} floor_formula_h={}\n", config.W, config.s,
             analysis::optimal_partitions(config.W, config.s),
             analysis::optimal_partitions_formula(config.W, config.s));
  fmt::print("{:>3} {:>5} {:>10} {:>9} {:>14} {:>9}\n", "h", "K", "mu", "feasible", "theta2'",
             "request");
  for (const auto& p : analysis::design_table(config.W, config.s)) {
    const std::string slope =
        p.feasible ? fmt::format("{:.6g}", analysis::theta2_derivative(
                                               static_cast<double>(p.h), p.W, p.s, n, d, profile))
                   : std::string("-");
    fmt::print("{:>3} {:>5} {:>10.4g} {:>9} {:>14} {:>9}\n", p.h, p.K, p.mu,
               p.feasible ? "yes" : "no", slope,
               analysis::request_condition(p.h, n, d, profile) ? "yes" : "no");
  }
  return 0;
}

int cmd_gen(const harness::ExperimentConfig& config, const std::string& format) {
  if (format != "csv" && format != "bin") {
    throw ConfigError(fmt::format("format must be csv or bin, got '{}'", format));
  }
  const auto data =
      harness::generate_synthetic(config.m, config.n, config.d, config.noise_std, config.seed);
  const fs::path dir = output_dir(config);
  save_matrix(dir / ("R." + format), data.R);
  save_matrix(dir / ("U." + format), data.U);
  save_matrix(dir / ("V." + format), data.V);
  fmt::print("wrote {}x{} R with planted rank {} to {}\n", config.m, config.n, config.d,
             dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded alternating least squares: factorization, straggler sweeps, design analysis"};
  app.require_subcommand(1);
  // "-h" is taken by the partition count.
  app.set_help_flag("--help", "print help");

  CommonArgs factorize_args, sweep_args, analyze_args, gen_args;
  std::string input;
  std::string format = "csv";

  auto* factorize = app.add_subcommand("factorize", "run baseline and coded ALS and compare");
  add_config_options(factorize, factorize_args);
  factorize->add_option("--input", input, "matrix file (.csv or .bin) instead of synthetic data");

  auto* sweep = app.add_subcommand("sweep", "simulate stage-1 times over (h, k)");
  add_config_options(sweep, sweep_args);

  auto* analyze = app.add_subcommand("analyze", "print the design table for W and s");
  add_config_options(analyze, analyze_args);

  auto* gen = app.add_subcommand("gen", "write a synthetic low-rank matrix");
  add_config_options(gen, gen_args);
  gen->add_option("--format", format, "csv or bin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*factorize) return cmd_factorize(resolve(factorize, factorize_args), input);
    if (*sweep) return cmd_sweep(resolve(sweep, sweep_args));
    if (*analyze) return cmd_analyze(resolve(analyze, analyze_args));
    if (*gen) return cmd_gen(resolve(gen, gen_args), format);
  } catch (const Error& e) {
    std::cerr << fmt::format("error ({}): {}\n", to_string(e.category()), e.what());
    return harness::exit_code_for(e.category());
  }
  return 0;
}
