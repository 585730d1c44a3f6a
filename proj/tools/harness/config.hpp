#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codedals/cluster.hpp"

namespace codedals::harness {

/// Flat experiment configuration. Text form is one `key=value` per line;
/// `#` starts a comment.
struct ExperimentConfig {
  std::size_t m = 240;
  std::size_t n = 160;
  std::size_t d = 8;
  std::size_t T = 10;
  std::size_t W = 50;
  std::size_t s = 5;
  /// none | fixed | random | delay
  std::string policy = "fixed";
  double delay_factor = 4.0;
  /// Empty means "auto": the largest feasible h for (W, s). The default stays
  /// below the h where decoding loses double precision at W = 50.
  std::optional<std::size_t> h = 4;
  double mu_u = 1e-7;
  double sigma_u = 2e-8;
  double noise_std = 0.1;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  std::size_t rounds = 1000;
  std::string output_dir = ".";
  std::vector<std::size_t> sweep_h{2, 3, 4, 5, 6};
  std::vector<std::size_t> sweep_k{10, 20, 30, 40, 50};

  /// Assigns one key from its text value. Throws ConfigError on unknown keys
  /// or malformed values.
  void set(std::string_view key, std::string_view value);
  /// Applies a sweep spec such as "h=2,3,4;k=10,20".
  void set_sweep(std::string_view spec);
  void validate() const;

  cluster::WorkerProfile profile() const { return {mu_u, sigma_u}; }
  /// Straggler policy over W workers; stragglers are the last s ids.
  cluster::StragglerPolicy straggler_policy() const;
  cluster::SimConfig sim_config() const;
  /// h, or the optimal partition count for (W, s) when automatic.
  std::size_t resolved_h() const;

  static const std::vector<std::string>& keys();

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Every key in keys() order; parse_config(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

}  // namespace codedals::harness
