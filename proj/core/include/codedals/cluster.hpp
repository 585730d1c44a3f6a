#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "codedals/epc.hpp"
#include "codedals/matrix.hpp"

namespace codedals::cluster {

/// Per-multiplication compute time ~ N(mu_u, sigma_u^2), in seconds.
struct WorkerProfile {
  double mu_u = 1e-7;
  double sigma_u = 2e-8;

  void validate() const;
};

/// Which workers straggle in a round.
///
/// FixedSet and RandomPerRound workers never respond; DelayFactor workers
/// respond with their compute time multiplied by `factor`.
struct StragglerPolicy {
  enum class Mode { None, FixedSet, RandomPerRound, DelayFactor };

  Mode mode = Mode::None;
  std::vector<std::size_t> workers;
  std::size_t count = 0;
  double factor = 1.0;

  static StragglerPolicy none() { return {}; }
  static StragglerPolicy fixed_set(std::vector<std::size_t> ids);
  static StragglerPolicy random_per_round(std::size_t s);
  static StragglerPolicy delay_factor(std::vector<std::size_t> ids, double factor);

  /// Workers that never respond in a round.
  std::size_t missing_per_round() const noexcept;
  void validate(std::size_t worker_count) const;

  friend bool operator==(const StragglerPolicy&, const StragglerPolicy&) = default;
};

struct SimConfig {
  std::size_t workers = 1;
  std::vector<WorkerProfile> profiles;  // one per worker
  StragglerPolicy policy;
  std::uint64_t seed = 0;
  /// Constant added to every response, seconds.
  double message_latency = 0.0;
  /// When false, no compute times are drawn; every responder finishes at
  /// message_latency. Straggler selection still applies.
  bool timing = true;

  static SimConfig homogeneous(std::size_t workers, WorkerProfile profile,
                               StragglerPolicy policy, std::uint64_t seed);
  void validate() const;
};

struct RoundTrace {
  std::size_t round = 0;
  std::string stage;
  std::size_t threshold = 0;
  /// Simulated finishing time per worker; +inf for workers that never respond.
  std::vector<double> completion;
  /// Multiplications assigned to each worker this round.
  std::vector<std::uint64_t> elements;
  /// The K earliest finishers, ties broken by worker id, in arrival order.
  std::vector<std::size_t> responders;
  /// Shards actually decoded: the K lowest worker ids among all responders.
  std::vector<std::size_t> decode_set;
  /// K-th smallest completion time among responders.
  double elapsed = 0.0;
};

/// Gaussian draw with mean elements*mu_u and variance elements*sigma_u^2,
/// redrawn while negative.
double sample_task_time(const WorkerProfile& profile, std::uint64_t elements,
                        std::mt19937_64& rng);

/// Royston's approximation of E[X_(r:n)] for n i.i.d. N(mu, sigma^2) draws,
/// mu + Phi^{-1}((r - 0.375) / (n + 0.25)) sigma.
double expected_order_stat(std::size_t r, std::size_t n, double mu, double sigma);

/// Closed-form per-iteration estimate of the dominant (E = DB) stage:
/// n^2 d mu_u / h^2 + Phi^{-1}((h^2 + h - 1 - a) / (W - s - 2a + 1)) (sqrt(d) n / h) sigma_u.
double expected_round_time(std::size_t h, std::size_t workers, std::size_t stragglers,
                           std::size_t n, std::size_t d, const WorkerProfile& profile);

/// Multiplications per worker for the iteration stages on an l x d factor:
/// stage 1 (E) is ceil(l/h)^2 d, stages 2-4 (F, B^T E, EG) are ceil(l/h) d^2.
std::uint64_t stage_elements(int stage, std::size_t l, std::size_t d, std::size_t h);

/// Deterministic discrete-event timing model for master/worker rounds.
///
/// Compute times and straggler draws come from two independent streams
/// seeded from SimConfig::seed, so identical configs give identical traces.
class Simulator {
 public:
  explicit Simulator(SimConfig config);

  const SimConfig& config() const noexcept { return config_; }
  std::size_t workers() const noexcept { return config_.workers; }

  /// Draws one round. Throws InsufficientResponses when fewer than
  /// `threshold` workers respond.
  RoundTrace simulate_round(std::span<const std::uint64_t> elements, std::size_t threshold,
                            std::string stage = {});
  RoundTrace simulate_round(std::uint64_t elements_per_worker, std::size_t threshold,
                            std::string stage = {});

  std::size_t rounds() const noexcept { return round_; }

 private:
  std::vector<bool> draw_absent();

  SimConfig config_;
  std::mt19937_64 time_rng_;
  std::mt19937_64 straggler_rng_;
  std::size_t round_ = 0;
};

/// A simulated cluster bound to evaluation points: runs protocol rounds by
/// simulating their timing, executing worker tasks for the decode set and
/// handing the shards to a decoder.
class Cluster {
 public:
  Cluster(SimConfig config, epc::EvalPoints points);
  /// Interleaved Chebyshev points for config.workers.
  explicit Cluster(SimConfig config);

  using WorkerTask = std::function<Matrix(std::size_t worker, double point)>;
  using Decoder = std::function<Matrix(std::span<const epc::CodedShard>)>;

  struct RoundResult {
    Matrix value;
    RoundTrace trace;
  };

  RoundResult run_protocol_round(const std::string& stage, std::uint64_t elements_per_worker,
                                 std::size_t threshold, const WorkerTask& task,
                                 const Decoder& decode);

  std::size_t workers() const noexcept { return simulator_.workers(); }
  const epc::EvalPoints& points() const noexcept { return points_; }
  const SimConfig& config() const noexcept { return simulator_.config(); }
  std::size_t missing_per_round() const noexcept {
    return simulator_.config().policy.missing_per_round();
  }

  std::span<const RoundTrace> traces() const noexcept { return traces_; }
  double total_elapsed() const noexcept { return total_elapsed_; }
  void clear_traces() noexcept;

 private:
  Simulator simulator_;
  epc::EvalPoints points_;
  std::vector<RoundTrace> traces_;
  double total_elapsed_ = 0.0;
};

/// round,worker_id,completion_time,used,elapsed; `used` marks the responder set.
void write_trace_csv(std::ostream& out, std::span<const RoundTrace> traces);

}  // namespace codedals::cluster
