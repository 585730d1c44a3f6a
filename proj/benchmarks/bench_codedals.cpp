#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "codedals/als.hpp"
#include "codedals/cluster.hpp"
#include "codedals/epc.hpp"
#include "codedals/matrix.hpp"

using namespace codedals;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = z(rng);
  }
  return m;
}

Matrix gram(std::size_t n) {
  const Matrix R = random_matrix(n + n / 2, n, 1);
  return matmul_tn(R, R);
}

}  // namespace

static void BM_EncodeD(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const Matrix D = gram(120);
  for (auto _ : state) benchmark::DoNotOptimize(epc::encode_D(D, h, 0.37));
}
BENCHMARK(BM_EncodeD)->DenseRange(2, 4);

static void BM_DecodeE(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const std::size_t K = h * h + h - 1;
  const Matrix D = gram(120);
  const Matrix B = random_matrix(120, 8, 2);
  const auto points = epc::EvalPoints::chebyshev_interleaved(K);
  std::vector<epc::CodedShard> shards;
  for (std::size_t w = 0; w < K; ++w) {
    shards.push_back({w, points[w],
                      matmul_tn(epc::encode_D(D, h, points[w]), epc::encode_fR(B, h, points[w]))});
  }
  for (auto _ : state) benchmark::DoNotOptimize(epc::decode_E(shards, h));
}
BENCHMARK(BM_DecodeE)->DenseRange(2, 4);

static void BM_RunIteration(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const Matrix D = gram(120);
  const Matrix B = als::initial_factor(120, 8, 3);
  cluster::Cluster cl(cluster::SimConfig::homogeneous(
      50, {}, cluster::StragglerPolicy::fixed_set({45, 46, 47, 48, 49}), 1));
  const auto storage = als::encode_storage(D, h, cl.points());
  const als::IterState s{0, B, B, Matrix::identity(8), Matrix::identity(8), 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(als::run_iteration(s, storage, cl));
    cl.clear_traces();
  }
}
BENCHMARK(BM_RunIteration)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

static void BM_SimulateRound(benchmark::State& state) {
  const auto W = static_cast<std::size_t>(state.range(0));
  cluster::Simulator sim(cluster::SimConfig::homogeneous(
      W, {}, cluster::StragglerPolicy::random_per_round(W / 10), 1));
  for (auto _ : state) benchmark::DoNotOptimize(sim.simulate_round(1600, W / 2));
}
BENCHMARK(BM_SimulateRound)->Arg(50)->Arg(500);

BENCHMARK_MAIN();
