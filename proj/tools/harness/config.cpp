#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "codedals/analysis.hpp"
#include "codedals/error.hpp"

namespace codedals::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError(fmt::format("{}: cannot parse '{}'", key, text));
  }
  return value;
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<std::size_t>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  return fmt::format("{}", fmt::join(v, ","));
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k{
      "m",     "n",      "d",         "T",    "W",      "s",          "policy",
      "delay_factor", "h", "mu_u", "sigma_u", "noise_std", "tol", "seed",
      "rounds", "output_dir", "sweep_h", "sweep_k"};
  return k;
}

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "m") m = parse_number<std::size_t>(key, value);
  else if (key == "n") n = parse_number<std::size_t>(key, value);
  else if (key == "d") d = parse_number<std::size_t>(key, value);
  else if (key == "T") T = parse_number<std::size_t>(key, value);
  else if (key == "W") W = parse_number<std::size_t>(key, value);
  else if (key == "s") s = parse_number<std::size_t>(key, value);
  else if (key == "policy") {
    if (value != "none" && value != "fixed" && value != "random" && value != "delay") {
      throw ConfigError(fmt::format("policy must be none, fixed, random or delay, got '{}'", value));
    }
    policy = std::string(value);
  } else if (key == "delay_factor") delay_factor = parse_number<double>(key, value);
  else if (key == "h") {
    if (value == "auto") h.reset();
    else h = parse_number<std::size_t>(key, value);
  } else if (key == "mu_u") mu_u = parse_number<double>(key, value);
  else if (key == "sigma_u") sigma_u = parse_number<double>(key, value);
  else if (key == "noise_std") noise_std = parse_number<double>(key, value);
  else if (key == "tol") tol = parse_number<double>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "rounds") rounds = parse_number<std::size_t>(key, value);
  else if (key == "output_dir") output_dir = std::string(value);
  else if (key == "sweep_h") sweep_h = parse_list(key, value);
  else if (key == "sweep_k") sweep_k = parse_list(key, value);
  else if (key == "sweep") set_sweep(value);
  else throw ConfigError(fmt::format("unknown config key '{}'", key));
}

void ExperimentConfig::set_sweep(std::string_view spec) {
  while (!spec.empty()) {
    const auto semi = spec.find(';');
    const auto part = trim(spec.substr(0, semi));
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("sweep: expected h=... or k=..., got '{}'", part));
    }
    const auto name = trim(part.substr(0, eq));
    if (name == "h") sweep_h = parse_list("sweep h", part.substr(eq + 1));
    else if (name == "k") sweep_k = parse_list("sweep k", part.substr(eq + 1));
    else throw ConfigError(fmt::format("sweep: unknown axis '{}'", name));
    if (semi == std::string_view::npos) break;
    spec.remove_prefix(semi + 1);
  }
}

void ExperimentConfig::validate() const {
  if (m == 0 || n == 0) throw ConfigError("m and n must be positive");
  if (d == 0 || d > std::min(m, n)) {
    throw ConfigError(fmt::format("d={} must lie in [1, min(m, n)={}]", d, std::min(m, n)));
  }
  if (T == 0) throw ConfigError("T must be positive");
  if (W == 0) throw ConfigError("W must be positive");
  if (s >= W) throw ConfigError(fmt::format("s={} must be below W={}", s, W));
  if (h && *h == 0) throw ConfigError("h must be positive or auto");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (rounds == 0) throw ConfigError("rounds must be positive");
  if (policy == "delay" && !(delay_factor > 1.0)) {
    throw ConfigError("delay_factor must exceed 1");
  }
  profile().validate();
}

cluster::StragglerPolicy ExperimentConfig::straggler_policy() const {
  std::vector<std::size_t> last(s);
  std::iota(last.begin(), last.end(), W - s);
  if (policy == "none") return cluster::StragglerPolicy::none();
  if (policy == "random") return cluster::StragglerPolicy::random_per_round(s);
  if (policy == "delay") return cluster::StragglerPolicy::delay_factor(std::move(last), delay_factor);
  return cluster::StragglerPolicy::fixed_set(std::move(last));
}

cluster::SimConfig ExperimentConfig::sim_config() const {
  return cluster::SimConfig::homogeneous(W, profile(), straggler_policy(), seed);
}

std::size_t ExperimentConfig::resolved_h() const {
  return h ? *h : analysis::optimal_partitions(W, s);
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected key=value", lineno));
    }
    config.set(trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path));
  return parse_config(in);
}

std::string serialize(const ExperimentConfig& c) {
  std::string out;
  auto put = [&out](std::string_view key, const auto& value) {
    fmt::format_to(std::back_inserter(out), "{}={}\n", key, value);
  };
  put("m", c.m);
  put("n", c.n);
  put("d", c.d);
  put("T", c.T);
  put("W", c.W);
  put("s", c.s);
  put("policy", c.policy);
  put("delay_factor", c.delay_factor);
  put("h", c.h ? std::to_string(*c.h) : std::string("auto"));
  put("mu_u", c.mu_u);
  put("sigma_u", c.sigma_u);
  put("noise_std", c.noise_std);
  put("tol", c.tol);
  put("seed", c.seed);
  put("rounds", c.rounds);
  put("output_dir", c.output_dir);
  put("sweep_h", join(c.sweep_h));
  put("sweep_k", join(c.sweep_k));
  return out;
}

}  // namespace codedals::harness
