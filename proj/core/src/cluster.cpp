#include "codedals/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "codedals/error.hpp"
#include "codedals/normal.hpp"

namespace codedals::cluster {

namespace {

constexpr double kRoystonAlpha = 0.375;
constexpr int kMaxRedraws = 1000;
// Straggler stream seed offset, so the two streams never coincide.
constexpr std::uint64_t kStragglerStreamSalt = 0x9e3779b97f4a7c15ULL;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

void WorkerProfile::validate() const {
  if (!(mu_u > 0.0) || !std::isfinite(mu_u)) {
    throw ConfigError(fmt::format("mu_u must be positive, got {}", mu_u));
  }
  if (!(sigma_u >= 0.0) || !std::isfinite(sigma_u)) {
    throw ConfigError(fmt::format("sigma_u must be non-negative, got {}", sigma_u));
  }
}

StragglerPolicy StragglerPolicy::fixed_set(std::vector<std::size_t> ids) {
  StragglerPolicy p;
  p.mode = Mode::FixedSet;
  p.workers = std::move(ids);
  return p;
}

StragglerPolicy StragglerPolicy::random_per_round(std::size_t s) {
  StragglerPolicy p;
  p.mode = Mode::RandomPerRound;
  p.count = s;
  return p;
}

StragglerPolicy StragglerPolicy::delay_factor(std::vector<std::size_t> ids, double factor) {
  StragglerPolicy p;
  p.mode = Mode::DelayFactor;
  p.workers = std::move(ids);
  p.factor = factor;
  return p;
}

std::size_t StragglerPolicy::missing_per_round() const noexcept {
  switch (mode) {
    case Mode::FixedSet: return workers.size();
    case Mode::RandomPerRound: return count;
    case Mode::None:
    case Mode::DelayFactor: return 0;
  }
  return 0;
}

void StragglerPolicy::validate(std::size_t worker_count) const {
  auto ids = workers;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("straggler ids must be distinct");
  }
  if (!ids.empty() && ids.back() >= worker_count) {
    throw ConfigError(fmt::format("straggler id {} outside [0, {})", ids.back(), worker_count));
  }
  if (mode == Mode::RandomPerRound && count > worker_count) {
    throw ConfigError(fmt::format("{} random stragglers among {} workers", count, worker_count));
  }
  if (mode == Mode::DelayFactor && !(factor > 1.0)) {
    throw ConfigError(fmt::format("delay factor must exceed 1, got {}", factor));
  }
}

SimConfig SimConfig::homogeneous(std::size_t workers, WorkerProfile profile,
                                 StragglerPolicy policy, std::uint64_t seed) {
  SimConfig c;
  c.workers = workers;
  c.profiles.assign(workers, profile);
  c.policy = std::move(policy);
  c.seed = seed;
  return c;
}

void SimConfig::validate() const {
  if (workers == 0) throw ConfigError("worker count must be positive");
  if (profiles.size() != workers) {
    throw ConfigError(fmt::format("{} profiles for {} workers", profiles.size(), workers));
  }
  for (const auto& p : profiles) p.validate();
  policy.validate(workers);
  if (!(message_latency >= 0.0) || !std::isfinite(message_latency)) {
    throw ConfigError("message latency must be non-negative");
  }
}

double sample_task_time(const WorkerProfile& profile, std::uint64_t elements,
                        std::mt19937_64& rng) {
  if (elements == 0) throw ArgumentError("sample_task_time: elements must be positive");
  const double n = static_cast<double>(elements);
  const double mean = n * profile.mu_u;
  if (profile.sigma_u == 0.0) return mean;
  std::normal_distribution<double> dist(mean, std::sqrt(n) * profile.sigma_u);
  for (int i = 0; i < kMaxRedraws; ++i) {
    const double t = dist(rng);
    if (t >= 0.0) return t;
  }
  return 0.0;
}

double expected_order_stat(std::size_t r, std::size_t n, double mu, double sigma) {
  if (r < 1 || r > n) {
    throw ArgumentError(fmt::format("order statistic rank {} outside [1, {}]", r, n));
  }
  const double p = (static_cast<double>(r) - kRoystonAlpha) /
                   (static_cast<double>(n) - 2.0 * kRoystonAlpha + 1.0);
  return mu + stats::normal_quantile(p) * sigma;
}

double expected_round_time(std::size_t h, std::size_t workers, std::size_t stragglers,
                           std::size_t n, std::size_t d, const WorkerProfile& profile) {
  if (h == 0) throw FeasibilityError("h must be positive");
  const std::size_t k = h * h + h - 1;
  if (stragglers >= workers || k > workers - stragglers) {
    throw FeasibilityError(fmt::format("h={} needs {} responders but W-s={}", h, k,
                                       workers > stragglers ? workers - stragglers : 0));
  }
  const double hd = static_cast<double>(h);
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double base = nd * nd * dd / (hd * hd) * profile.mu_u;
  if (profile.sigma_u == 0.0) return base;
  const double spread = std::sqrt(dd) * nd / hd * profile.sigma_u;
  const double p = (static_cast<double>(k) - kRoystonAlpha) /
                   (static_cast<double>(workers - stragglers) - 2.0 * kRoystonAlpha + 1.0);
  return base + stats::normal_quantile(p) * spread;
}

std::uint64_t stage_elements(int stage, std::size_t l, std::size_t d, std::size_t h) {
  if (h == 0) throw ArgumentError("h must be positive");
  const std::uint64_t block = ceil_div(l, h);
  switch (stage) {
    case 1: return block * block * d;
    case 2:
    case 3:
    case 4: return block * d * d;
    default: throw ArgumentError(fmt::format("unknown stage {}", stage));
  }
}

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      time_rng_(config_.seed),
      straggler_rng_(config_.seed ^ kStragglerStreamSalt) {
  config_.validate();
}

std::vector<bool> Simulator::draw_absent() {
  const std::size_t w = config_.workers;
  std::vector<bool> absent(w, false);
  const auto& policy = config_.policy;
  switch (policy.mode) {
    case StragglerPolicy::Mode::FixedSet:
      for (std::size_t id : policy.workers) absent[id] = true;
      break;
    case StragglerPolicy::Mode::RandomPerRound: {
      std::vector<std::size_t> ids(w);
      std::iota(ids.begin(), ids.end(), std::size_t{0});
      for (std::size_t i = 0; i < policy.count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, w - 1);
        std::swap(ids[i], ids[pick(straggler_rng_)]);
        absent[ids[i]] = true;
      }
      break;
    }
    case StragglerPolicy::Mode::None:
    case StragglerPolicy::Mode::DelayFactor:
      break;
  }
  return absent;
}

RoundTrace Simulator::simulate_round(std::span<const std::uint64_t> elements,
                                     std::size_t threshold, std::string stage) {
  const std::size_t w = config_.workers;
  if (elements.size() != w) {
    throw ArgumentError(fmt::format("{} task sizes for {} workers", elements.size(), w));
  }
  if (threshold == 0) throw ArgumentError("recovery threshold must be positive");

  RoundTrace trace;
  trace.round = round_++;
  trace.stage = std::move(stage);
  trace.threshold = threshold;
  trace.elements.assign(elements.begin(), elements.end());
  trace.completion.assign(w, std::numeric_limits<double>::infinity());

  const auto absent = draw_absent();
  const auto& policy = config_.policy;
  // Every worker draws a time, responding or not, so worker i's draw in a
  // round does not depend on the straggler pattern.
  for (std::size_t i = 0; i < w; ++i) {
    double t = config_.timing ? sample_task_time(config_.profiles[i], elements[i], time_rng_)
                              : 0.0;
    if (policy.mode == StragglerPolicy::Mode::DelayFactor &&
        std::find(policy.workers.begin(), policy.workers.end(), i) != policy.workers.end()) {
      t *= policy.factor;
    }
    if (!absent[i]) trace.completion[i] = t + config_.message_latency;
  }

  std::vector<std::size_t> responding;
  for (std::size_t i = 0; i < w; ++i) {
    if (!absent[i]) responding.push_back(i);
  }
  if (responding.size() < threshold) {
    throw InsufficientResponses(threshold, responding.size());
  }

  trace.decode_set.assign(responding.begin(), responding.begin() + threshold);

  std::stable_sort(responding.begin(), responding.end(), [&](std::size_t a, std::size_t b) {
    return trace.completion[a] < trace.completion[b];
  });
  trace.responders.assign(responding.begin(), responding.begin() + threshold);
  trace.elapsed = trace.completion[trace.responders.back()];
  return trace;
}

RoundTrace Simulator::simulate_round(std::uint64_t elements_per_worker, std::size_t threshold,
                                     std::string stage) {
  const std::vector<std::uint64_t> tasks(config_.workers, elements_per_worker);
  return simulate_round(tasks, threshold, std::move(stage));
}

Cluster::Cluster(SimConfig config, epc::EvalPoints points)
    : simulator_(std::move(config)), points_(std::move(points)) {
  if (points_.size() != simulator_.workers()) {
    throw ConfigError(fmt::format("{} evaluation points for {} workers", points_.size(),
                                  simulator_.workers()));
  }
}

Cluster::Cluster(SimConfig config)
    : Cluster(config, epc::EvalPoints::chebyshev_interleaved(config.workers)) {}

Cluster::RoundResult Cluster::run_protocol_round(const std::string& stage,
                                                 std::uint64_t elements_per_worker,
                                                 std::size_t threshold, const WorkerTask& task,
                                                 const Decoder& decode) {
  auto trace = simulator_.simulate_round(elements_per_worker, threshold, stage);
  std::vector<epc::CodedShard> shards;
  shards.reserve(trace.decode_set.size());
  for (std::size_t w : trace.decode_set) {
    shards.push_back(epc::CodedShard{w, points_[w], task(w, points_[w])});
  }
  Matrix value = decode(shards);
  total_elapsed_ += trace.elapsed;
  traces_.push_back(trace);
  return RoundResult{std::move(value), std::move(trace)};
}

void Cluster::clear_traces() noexcept {
  traces_.clear();
  total_elapsed_ = 0.0;
}

void write_trace_csv(std::ostream& out, std::span<const RoundTrace> traces) {
  std::string buf = "round,worker_id,completion_time,used,elapsed\n";
  for (const auto& t : traces) {
    for (std::size_t w = 0; w < t.completion.size(); ++w) {
      const bool used = std::find(t.responders.begin(), t.responders.end(), w) !=
                        t.responders.end();
      fmt::format_to(std::back_inserter(buf), "{},{},{:.17g},{},{:.17g}\n", t.round, w,
                     t.completion[w], used ? 1 : 0, t.elapsed);
    }
  }
  out << buf;
}

}  // namespace codedals::cluster
