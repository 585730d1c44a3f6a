#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "codedals/analysis.hpp"
#include "codedals/epc.hpp"

namespace codedals::harness {

namespace {

std::size_t round_up(std::size_t a, std::size_t b) { return (a + b - 1) / b * b; }

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(rows * cols);
  for (double& v : data) v = dist(rng);
  return Matrix(rows, cols, std::move(data));
}

}  // namespace

Synthetic generate_synthetic(std::size_t m, std::size_t n, std::size_t d, double noise_std,
                             std::uint64_t seed) {
  if (m == 0 || n == 0 || d == 0 || d > std::min(m, n)) {
    throw ConfigError(fmt::format("invalid synthetic shape m={}, n={}, d={}", m, n, d));
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError(fmt::format("noise_std must be non-negative, got {}", noise_std));
  }
  std::mt19937_64 rng(seed);
  Matrix U = gaussian(m, d, 1.0, rng);
  Matrix V = gaussian(n, d, 1.0, rng);
  Matrix R = matmul(U, transpose(V));
  if (noise_std > 0.0) R += gaussian(m, n, noise_std, rng);
  return Synthetic{std::move(R), std::move(U), std::move(V)};
}

const SweepCell& SweepTable::at(std::size_t h, std::size_t k) const {
  for (const auto& c : cells) {
    if (c.h == h && c.k == k) return c;
  }
  throw ArgumentError(fmt::format("no sweep cell h={}, k={}", h, k));
}

SweepTable run_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepTable table;
  table.hs = config.sweep_h;
  table.ks = config.sweep_k;
  std::sort(table.hs.begin(), table.hs.end());
  std::sort(table.ks.begin(), table.ks.end());
  const std::size_t l = std::min(config.m, config.n);

  for (std::size_t k : table.ks) {
    for (std::size_t h : table.hs) {
      SweepCell cell{h, k, false, 0.0, 0.0};
      const std::size_t threshold = epc::recovery_threshold(epc::TaskKind::Iteration, h);
      if (h > 0 && k <= config.W && threshold <= k) {
        const std::size_t s = config.W - k;
        std::vector<std::size_t> absent(s);
        for (std::size_t i = 0; i < s; ++i) absent[i] = k + i;
        auto sim_config = cluster::SimConfig::homogeneous(
            config.W, config.profile(), cluster::StragglerPolicy::fixed_set(std::move(absent)),
            config.seed);
        cluster::Simulator sim(std::move(sim_config));
        const auto elements = cluster::stage_elements(1, l, config.d, h);
        double total = 0.0;
        for (std::size_t r = 0; r < config.rounds; ++r) {
          total += sim.simulate_round(elements, threshold, "E").elapsed;
        }
        cell.feasible = true;
        cell.mean_time = total / static_cast<double>(config.rounds);
        cell.est_time = cluster::expected_round_time(h, config.W, s, l, config.d, config.profile());
      }
      table.cells.push_back(cell);
    }
  }
  return table;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  std::string buf = "h,k,mean_time,est_time,feasible\n";
  for (const auto& c : table.cells) {
    if (c.feasible) {
      fmt::format_to(std::back_inserter(buf), "{},{},{:.17g},{:.17g},1\n", c.h, c.k, c.mean_time,
                     c.est_time);
    } else {
      fmt::format_to(std::back_inserter(buf), "{},{},-,-,0\n", c.h, c.k);
    }
  }
  out << buf;
}

std::string render_sweep_table(const SweepTable& table) {
  std::string out = fmt::format("{:>6}", "k\\h");
  for (std::size_t h : table.hs) fmt::format_to(std::back_inserter(out), " {:>12}", h);
  out += '\n';
  for (std::size_t k : table.ks) {
    fmt::format_to(std::back_inserter(out), "{:>6}", k);
    for (std::size_t h : table.hs) {
      const auto& c = table.at(h, k);
      if (c.feasible) {
        fmt::format_to(std::back_inserter(out), " {:>12.6e}", c.mean_time);
      } else {
        fmt::format_to(std::back_inserter(out), " {:>12}", "-");
      }
    }
    out += '\n';
  }
  return out;
}

FactorizationReport run_factorization(const ExperimentConfig& config, const Matrix& R) {
  config.validate();
  if (R.rows() != config.m || R.cols() != config.n) {
    throw ShapeError(fmt::format("input is {}x{} but config says m={}, n={}", R.rows(), R.cols(),
                                 config.m, config.n));
  }
  const std::size_t h = config.resolved_h();
  const auto orientation = als::orientation_for(R);
  const bool column_side = orientation == als::Orientation::ColumnSide;
  const std::size_t l = column_side ? R.cols() : R.rows();
  const std::size_t other = column_side ? R.rows() : R.cols();

  // Pad the iterated side to a multiple of h, keeping the orientation.
  const std::size_t l_pad = round_up(l, h);
  const std::size_t other_pad = column_side ? std::max(other, l_pad) : std::max(other, l_pad + 1);
  const Matrix R_pad =
      column_side ? pad_to(R, other_pad, l_pad) : pad_to(R, l_pad, other_pad);

  const Matrix B0 = als::initial_factor(l, config.d, config.seed);

  als::Problem coded_problem{R_pad, config.d, config.T, config.tol, config.seed, true,
                             pad_to(B0, l_pad, config.d)};
  cluster::Cluster cluster(config.sim_config());
  auto coded = als::factorize_coded(coded_problem, cluster, h);
  coded.U = crop(coded.U, R.rows(), config.d);
  coded.V = crop(coded.V, R.cols(), config.d);
  coded.loss_history.back() = als::loss(R, coded.U, coded.V);

  als::Problem base_problem{R, config.d, config.T, config.tol, config.seed, true, B0};
  auto baseline = als::als_baseline(base_problem);

  const double lb = baseline.final_loss();
  const double denom = std::max(lb, 1e-12 * frobenius_sq(R));
  const double rel = denom > 0.0 ? std::abs(coded.final_loss() - lb) / denom : 0.0;

  const auto traces = cluster.traces();
  return FactorizationReport{config,
                             h,
                             orientation,
                             R_pad.rows(),
                             R_pad.cols(),
                             std::move(coded),
                             std::move(baseline),
                             std::vector<cluster::RoundTrace>(traces.begin(), traces.end()),
                             rel};
}

FactorizationReport run_factorization(const ExperimentConfig& config) {
  config.validate();
  const auto data =
      generate_synthetic(config.m, config.n, config.d, config.noise_std, config.seed);
  return run_factorization(config, data.R);
}

std::string render_report(const FactorizationReport& r) {
  std::string out;
  const std::string cfg = serialize(r.config);
  std::size_t start = 0;
  while (start < cfg.size()) {
    const auto end = cfg.find('\n', start);
    fmt::format_to(std::back_inserter(out), "# {}\n", cfg.substr(start, end - start));
    start = end + 1;
  }
  auto line = [&out](std::string_view key, const auto& value) {
    fmt::format_to(std::back_inserter(out), "{}={}\n", key, value);
  };
  auto real = [&out](std::string_view key, double value) {
    fmt::format_to(std::back_inserter(out), "{}={:.17g}\n", key, value);
  };
  line("resolved_h", r.h);
  line("orientation", als::to_string(r.orientation));
  line("padded_shape", fmt::format("{}x{}", r.padded_rows, r.padded_cols));
  line("iterations_coded", r.coded.iterations_run);
  line("iterations_baseline", r.baseline.iterations_run);
  real("final_loss_coded", r.coded.final_loss());
  real("final_loss_baseline", r.baseline.final_loss());
  real("relative_difference", r.relative_difference);
  line("protocol_rounds", r.traces.size());
  real("simulated_time", r.coded.simulated_time);
  line("agreement", r.agrees() ? "yes" : "no");
  return out;
}

void write_loss_csv(std::ostream& out, std::span<const double> losses) {
  std::string buf = "iteration,value\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    fmt::format_to(std::back_inserter(buf), "{},{:.17g}\n", i + 1, losses[i]);
  }
  out << buf;
}

int exit_code_for(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Feasibility:
    case ErrorCategory::InsufficientResponses:
      return 3;
    case ErrorCategory::NumericalDecode:
    case ErrorCategory::Codec:
      return 4;
    case ErrorCategory::Degeneracy:
    case ErrorCategory::Singularity:
      return 5;
    case ErrorCategory::Shape:
    case ErrorCategory::Partition:
    case ErrorCategory::Config:
    case ErrorCategory::Argument:
    case ErrorCategory::Io:
      return 2;
  }
  return 2;
}

}  // namespace codedals::harness
