#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "codedals/epc.hpp"
#include "codedals/error.hpp"
#include "support/oracles.hpp"

using namespace codedals;
using namespace codedals::epc;

namespace {

// Block (j, i) of an l x l matrix split h x h: row block j, column block i.
Matrix block(const Matrix& a, std::size_t h, std::size_t j, std::size_t i) {
  const std::size_t br = a.rows() / h;
  const std::size_t bc = a.cols() / h;
  return oracle::slice(a, j * br, i * bc, br, bc);
}

Matrix row_block(const Matrix& a, std::size_t h, std::size_t j) {
  const std::size_t br = a.rows() / h;
  return oracle::slice(a, j * br, 0, br, a.cols());
}

// sum_{j,i} D_{j,i} x^{j+ih}, no symmetrisation.
Matrix oracle_encode_D(const Matrix& D, std::size_t h, double x) {
  std::vector<std::pair<double, Matrix>> terms;
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t i = 0; i < h; ++i) {
      terms.emplace_back(std::pow(x, static_cast<double>(j + i * h)), block(D, h, j, i));
    }
  }
  return oracle::scaled_sum(terms);
}

Matrix oracle_fL(const Matrix& C, std::size_t h, double x) {
  std::vector<std::pair<double, Matrix>> terms;
  for (std::size_t j = 0; j < h; ++j) {
    terms.emplace_back(std::pow(x, static_cast<double>(j)), row_block(C, h, j));
  }
  return oracle::scaled_sum(terms);
}

Matrix oracle_fR(const Matrix& C, std::size_t h, double x) {
  std::vector<std::pair<double, Matrix>> terms;
  for (std::size_t j = 0; j < h; ++j) {
    terms.emplace_back(std::pow(x, static_cast<double>(h - 1 - j)), row_block(C, h, j));
  }
  return oracle::scaled_sum(terms);
}

std::vector<CodedShard> pick(const std::vector<CodedShard>& all,
                             const std::vector<std::size_t>& idx) {
  std::vector<CodedShard> out;
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

std::vector<CodedShard> e_shards(const Matrix& D, const Matrix& B, std::size_t h,
                                 const EvalPoints& pts) {
  std::vector<CodedShard> out;
  for (std::size_t w = 0; w < pts.size(); ++w) {
    out.push_back({w, pts[w], oracle::naive_tn(oracle_encode_D(D, h, pts[w]),
                                               oracle_fR(B, h, pts[w]))});
  }
  return out;
}

std::vector<CodedShard> inner_shards(const Matrix& A, const Matrix& C, std::size_t h,
                                     const EvalPoints& pts) {
  std::vector<CodedShard> out;
  for (std::size_t w = 0; w < pts.size(); ++w) {
    out.push_back({w, pts[w], oracle::naive_tn(oracle_fL(A, h, pts[w]), oracle_fR(C, h, pts[w]))});
  }
  return out;
}

std::vector<CodedShard> block_shards(const Matrix& M, std::size_t h, const EvalPoints& pts) {
  std::vector<CodedShard> out;
  for (std::size_t w = 0; w < pts.size(); ++w) out.push_back({w, pts[w], oracle_fR(M, h, pts[w])});
  return out;
}

}  // namespace

TEST_SUITE("epc") {

TEST_CASE("evaluation points") {
  const auto pts = EvalPoints::chebyshev(4);
  REQUIRE(pts.size() == 4);
  for (std::size_t w = 1; w <= 4; ++w) {
    CHECK(pts[w - 1] == doctest::Approx(std::cos((2.0 * w - 1.0) * std::numbers::pi / 8.0)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(EvalPoints({0.5, 0.5}), CodecError);
  CHECK_THROWS_AS(EvalPoints({1.5}), CodecError);
  CHECK_THROWS_AS(EvalPoints::chebyshev(0), CodecError);
}

TEST_CASE("interleaved points permute the chebyshev nodes and spread every prefix") {
  for (std::size_t W : {1u, 5u, 8u, 13u, 50u}) {
    const auto nat = EvalPoints::chebyshev(W);
    const auto inter = EvalPoints::chebyshev_interleaved(W);
    std::multiset<double> a(nat.values().begin(), nat.values().end());
    std::multiset<double> b(inter.values().begin(), inter.values().end());
    CHECK(a == b);
  }
  // Any prefix of length >= 2 has points on both sides of zero.
  const auto inter = EvalPoints::chebyshev_interleaved(50);
  for (std::size_t k = 2; k <= 50; ++k) {
    const auto v = inter.values().subspan(0, k);
    CHECK(*std::min_element(v.begin(), v.end()) < 0.0);
    CHECK(*std::max_element(v.begin(), v.end()) > 0.0);
  }
}

TEST_CASE("recovery thresholds") {
  CHECK(recovery_threshold(TaskKind::Product, 1) == 1);
  CHECK(recovery_threshold(TaskKind::Inner, 1) == 1);
  CHECK(recovery_threshold(TaskKind::Blocks, 1) == 1);
  CHECK(recovery_threshold(TaskKind::Product, 2) == 5);
  CHECK(recovery_threshold(TaskKind::Inner, 2) == 3);
  CHECK(recovery_threshold(TaskKind::Blocks, 2) == 2);
  CHECK(recovery_threshold(TaskKind::Product, 3) == 11);
  CHECK(recovery_threshold(TaskKind::Inner, 3) == 5);
  CHECK(recovery_threshold(TaskKind::Blocks, 3) == 3);
  for (std::size_t h = 1; h <= 9; ++h) {
    CHECK(recovery_threshold(TaskKind::Iteration, h) == h * h + h - 1);
  }
  CHECK(EpcParams{2, 1, 2}.recovery_threshold() == 5);
  CHECK(EpcParams{3, 2, 2}.recovery_threshold() == 13);
  CHECK(EpcParams{3, 2, 2}.product_degree() == 12);
}

TEST_CASE("encode_D examples") {
  std::mt19937_64 rng(31);
  const Matrix D = oracle::random_symmetric(6, rng);
  CHECK(oracle::max_diff(encode_D(D, 1, 0.7), D) < 1e-15);
  CHECK(encode_D(D, 2, 0.0) == block(D, 2, 0, 0));
  const Matrix at_one = oracle::scaled_sum({{1.0, block(D, 2, 0, 0)},
                                            {1.0, block(D, 2, 1, 0)},
                                            {1.0, block(D, 2, 0, 1)},
                                            {1.0, block(D, 2, 1, 1)}});
  CHECK(oracle::max_diff(encode_D(D, 2, 1.0), at_one) < 1e-14);
  CHECK(oracle::max_diff(encode_D(D, 3, -0.3), oracle_encode_D(D, 3, -0.3)) < 1e-14);
}

TEST_CASE("encode_D rejects bad input") {
  std::mt19937_64 rng(32);
  const Matrix D = oracle::random_symmetric(6, rng);
  CHECK_THROWS_AS(encode_D(D, 4, 0.5), CodecError);
  CHECK_THROWS_AS(encode_D(oracle::random_matrix(6, 6, rng), 2, 0.5), CodecError);
  CHECK_THROWS_AS(encode_D(oracle::random_matrix(6, 4, rng), 2, 0.5), CodecError);
  // Tiny asymmetry is within tolerance and symmetrised away.
  Matrix nearly = D;
  nearly(0, 1) += 1e-12;
  CHECK_NOTHROW(encode_D(nearly, 2, 0.5));
}

TEST_CASE("f_L and f_R examples") {
  std::mt19937_64 rng(33);
  const Matrix C = oracle::random_matrix(9, 2, rng);
  CHECK(encode_fL(C, 1, 0.3) == C);
  CHECK(encode_fR(C, 1, 0.3) == C);
  CHECK(encode_fL(C, 3, 0.0) == row_block(C, 3, 0));
  CHECK(encode_fR(C, 3, 0.0) == row_block(C, 3, 2));
  const Matrix c0 = row_block(C, 3, 0);
  const Matrix c1 = row_block(C, 3, 1);
  const Matrix c2 = row_block(C, 3, 2);
  CHECK(oracle::max_diff(encode_fL(C, 3, 2.0), oracle::scaled_sum({{1, c0}, {2, c1}, {4, c2}})) <
        1e-14);
  CHECK(oracle::max_diff(encode_fR(C, 3, 2.0), oracle::scaled_sum({{4, c0}, {2, c1}, {1, c2}})) <
        1e-14);
  CHECK_THROWS_AS(encode_fL(C, 2, 0.5), CodecError);
  CHECK_THROWS_AS(encode_fR(C, 4, 0.5), CodecError);
}

TEST_CASE("general encoder examples") {
  std::mt19937_64 rng(34);
  const Matrix A = oracle::random_matrix(4, 4, rng);
  const Matrix B = oracle::random_matrix(4, 2, rng);
  {
    const auto [a, b] = epc_encode_general(A, B, {1, 1, 1}, 0.4);
    CHECK(a == A);
    CHECK(b == B);
  }
  {
    const auto [a, b] = epc_encode_general(A, B, {1, 1, 2}, 0.0);
    CHECK(a == oracle::slice(A, 0, 0, 2, 4));
    CHECK(b == oracle::slice(B, 2, 0, 2, 2));
  }
  {
    const EpcParams params{2, 1, 2};
    const auto pts = EvalPoints::chebyshev(5);
    std::vector<CodedShard> shards;
    for (std::size_t w = 0; w < 5; ++w) {
      const auto [a, b] = epc_encode_general(A, B, params, pts[w]);
      shards.push_back({w, pts[w], oracle::naive_tn(a, b)});
    }
    CHECK(oracle::rel_diff(decode_general(shards, params), oracle::naive_tn(A, B)) < 1e-12);
    shards.pop_back();
    CHECK_THROWS_AS(decode_general(shards, params), InsufficientResponses);
  }
  CHECK_THROWS_AS(epc_encode_general(A, B, {3, 1, 2}, 0.1), CodecError);
  CHECK_THROWS_AS(epc_encode_general(A, oracle::random_matrix(3, 2, rng), {1, 1, 1}, 0.1),
                  CodecError);
}

TEST_CASE("general product over several (p, q, r)") {
  std::mt19937_64 rng(35);
  for (const EpcParams params : {EpcParams{1, 2, 1}, EpcParams{2, 2, 1}, EpcParams{2, 2, 2},
                                 EpcParams{3, 1, 2}, EpcParams{1, 3, 3}}) {
    const Matrix A = oracle::random_matrix(params.r * 2, params.p * 2, rng);
    const Matrix B = oracle::random_matrix(params.r * 2, params.q * 3, rng);
    const std::size_t K = params.recovery_threshold();
    const auto pts = EvalPoints::chebyshev(K + 2);
    std::vector<CodedShard> shards;
    for (std::size_t w = 0; w < pts.size(); ++w) {
      const auto [a, b] = epc_encode_general(A, B, params, pts[w]);
      shards.push_back({w, pts[w], matmul_tn(a, b)});
    }
    // Extra shards exercise the residual check.
    CHECK(oracle::rel_diff(decode_general(shards, params), oracle::naive_tn(A, B)) < 1e-10);
  }
}

TEST_CASE("interpolate examples") {
  const Matrix c{{0.25, -1.5}};
  const std::vector<CodedShard> one{{0, 0.3, c}};
  const auto p0 = interpolate(one, 0);
  REQUIRE(p0.coefficient(0) != nullptr);
  CHECK(*p0.coefficient(0) == c);

  const Matrix c0{{1.0, 2.0}};
  const Matrix c1{{-3.0, 0.5}};
  const std::vector<CodedShard> two{{0, -1.0, oracle::scaled_sum({{1, c0}, {-1, c1}})},
                                    {1, 1.0, oracle::scaled_sum({{1, c0}, {1, c1}})}};
  const auto p1 = interpolate(two, 1);
  CHECK(oracle::max_diff(*p1.coefficient(0), c0) < 1e-15);
  CHECK(oracle::max_diff(*p1.coefficient(1), c1) < 1e-15);
  CHECK(p1.coefficient(2) == nullptr);

  const auto pts = EvalPoints::chebyshev(4);
  std::vector<CodedShard> four;
  for (std::size_t w = 0; w < 4; ++w) four.push_back({w, pts[w], c});
  try {
    interpolate(four, 4);
    FAIL("expected InsufficientResponses");
  } catch (const InsufficientResponses& e) {
    CHECK(e.needed() == 5);
    CHECK(e.got() == 4);
  }
}

TEST_CASE("interpolate is exact to 1e-12 up to degree 12") {
  std::mt19937_64 rng(36);
  for (std::size_t degree = 0; degree <= 12; ++degree) {
    std::vector<BlockPoly::Term> terms;
    for (std::size_t e = 0; e <= degree; ++e) terms.push_back({e, oracle::random_matrix(3, 2, rng)});
    const BlockPoly truth(degree, terms);
    const auto pts = EvalPoints::chebyshev(degree + 1);
    std::vector<CodedShard> shards;
    for (std::size_t w = 0; w < pts.size(); ++w) shards.push_back({w, pts[w], truth.evaluate(pts[w])});
    const auto got = interpolate(shards, degree);
    for (std::size_t e = 0; e <= degree; ++e) {
      INFO("degree ", degree, " exponent ", e);
      CHECK(oracle::max_diff(*got.coefficient(e), *truth.coefficient(e)) <= 1e-12);
    }
  }
}

TEST_CASE("interpolate error paths") {
  const Matrix c{{1.0}};
  const std::vector<CodedShard> dup{{0, 0.5, c}, {1, 0.5, c}};
  CHECK_THROWS_AS(interpolate(dup, 1), CodecError);
  const std::vector<CodedShard> shapes{{0, 0.5, c}, {1, -0.5, Matrix{{1.0, 2.0}}}};
  CHECK_THROWS_AS(interpolate(shapes, 1), CodecError);
  // A corrupted held-out shard fails the residual check.
  const std::vector<CodedShard> bad{{0, -0.5, c}, {1, 0.5, c}, {2, 0.0, Matrix{{1.5}}}};
  CHECK_THROWS_AS(interpolate(bad, 1), NumericalDecodeError);
  const std::vector<CodedShard> good{{0, -0.5, c}, {1, 0.5, c}, {2, 0.0, c}};
  CHECK_NOTHROW(interpolate(good, 1));
}

TEST_CASE("ill-conditioned interpolation is refused") {
  const auto pts = EvalPoints::chebyshev_interleaved(50);
  std::vector<CodedShard> shards;
  for (std::size_t w = 0; w < 41; ++w) shards.push_back({w, pts[w], Matrix{{1.0}}});
  CHECK_THROWS_AS(interpolate(shards, 40), NumericalDecodeError);
  // The same nodes pass when the bound is relaxed.
  CHECK_NOTHROW(interpolate(shards, 40, DecodeOptions{1e-6, 1.0}));
}

TEST_CASE("decode_E examples") {
  std::mt19937_64 rng(37);
  {
    const Matrix D = oracle::random_symmetric(4, rng);
    const Matrix B = oracle::random_matrix(4, 2, rng);
    const auto shards = e_shards(D, B, 1, EvalPoints::chebyshev(1));
    CHECK(oracle::rel_diff(decode_E(shards, 1), oracle::naive_matmul(D, B)) < 1e-14);
  }
  const Matrix D = oracle::random_symmetric(8, rng);
  const Matrix B = oracle::random_matrix(8, 3, rng);
  const auto all = e_shards(D, B, 2, EvalPoints::chebyshev(8));
  const Matrix DB = oracle::naive_matmul(D, B);
  oracle::for_each_subset(8, 5, [&](const std::vector<std::size_t>& idx) {
    CHECK(oracle::rel_diff(decode_E(pick(all, idx), 2), DB) < 1e-8);
  });
  try {
    decode_E(pick(all, {0, 1, 2, 3}), 2);
    FAIL("expected InsufficientResponses");
  } catch (const InsufficientResponses& e) {
    CHECK(e.needed() == 5);
    CHECK(e.got() == 4);
  }
}

TEST_CASE("decode_E recovers D^T B, not D B, for asymmetric D") {
  std::mt19937_64 rng(38);
  const Matrix D = oracle::random_matrix(6, 6, rng);
  const Matrix B = oracle::random_matrix(6, 2, rng);
  const auto shards = e_shards(D, B, 2, EvalPoints::chebyshev(5));
  const Matrix got = decode_E(shards, 2);
  CHECK(oracle::rel_diff(got, oracle::naive_tn(D, B)) < 1e-10);
  CHECK(oracle::rel_diff(got, oracle::naive_matmul(D, B)) > 1e-2);
}

TEST_CASE("decode_inner examples") {
  std::mt19937_64 rng(39);
  {
    const Matrix A = oracle::random_matrix(3, 2, rng);
    const auto shards = inner_shards(A, A, 1, EvalPoints::chebyshev(1));
    CHECK(oracle::rel_diff(decode_inner(shards, 1), oracle::naive_tn(A, A)) < 1e-14);
  }
  const Matrix A = oracle::random_matrix(6, 2, rng);
  const auto all = inner_shards(A, A, 2, EvalPoints::chebyshev(8));
  const Matrix AtA = oracle::naive_tn(A, A);
  oracle::for_each_subset(8, 3, [&](const std::vector<std::size_t>& idx) {
    const Matrix got = decode_inner(pick(all, idx), 2);
    CHECK(oracle::rel_diff(got, AtA) < 1e-8);
    CHECK(asymmetry(got) < 1e-10);
  });
  try {
    decode_inner(pick(all, {0, 1}), 2);
    FAIL("expected InsufficientResponses");
  } catch (const InsufficientResponses& e) {
    CHECK(e.needed() == 3);
    CHECK(e.got() == 2);
  }
}

TEST_CASE("decode_blocks examples") {
  std::mt19937_64 rng(40);
  {
    const Matrix M = oracle::random_matrix(3, 2, rng);
    CHECK(decode_blocks(block_shards(M, 1, EvalPoints::chebyshev(1)), 1) == M);
  }
  const Matrix M = oracle::random_matrix(9, 2, rng);
  const auto all = block_shards(M, 3, EvalPoints::chebyshev(8));
  oracle::for_each_subset(8, 3, [&](const std::vector<std::size_t>& idx) {
    CHECK(oracle::max_diff(decode_blocks(pick(all, idx), 3), M) < 1e-10);
  });
  try {
    decode_blocks(pick(all, {0, 1}), 3);
    FAIL("expected InsufficientResponses");
  } catch (const InsufficientResponses& e) {
    CHECK(e.needed() == 3);
    CHECK(e.got() == 2);
  }
  // Ascending order reads f_L payloads.
  std::vector<CodedShard> asc;
  const auto pts = EvalPoints::chebyshev(3);
  for (std::size_t w = 0; w < 3; ++w) asc.push_back({w, pts[w], oracle_fL(M, 3, pts[w])});
  CHECK(oracle::max_diff(decode_blocks(asc, 3, BlockOrder::Ascending), M) < 1e-10);
}

TEST_CASE("decode-set independence over all K-subsets of W=8") {
  std::mt19937_64 rng(41);
  for (std::size_t h = 1; h <= 2; ++h) {
    const std::size_t l = 4 * h;
    const Matrix D = oracle::random_symmetric(l, rng);
    const Matrix B = oracle::random_matrix(l, 2, rng);
    const auto pts = EvalPoints::chebyshev(8);
    const auto es = e_shards(D, B, h, pts);
    const auto is = inner_shards(B, B, h, pts);
    const auto bs = block_shards(B, h, pts);
    const Matrix e_ref = decode_E(pick(es, {0, 1, 2, 3, 4}), h);
    const Matrix i_ref = decode_inner(pick(is, {0, 1, 2}), h);
    const Matrix b_ref = decode_blocks(pick(bs, {0, 1}), h);
    oracle::for_each_subset(8, h * h + h - 1, [&](const std::vector<std::size_t>& idx) {
      CHECK(oracle::rel_diff(decode_E(pick(es, idx), h), e_ref) < 1e-8);
    });
    oracle::for_each_subset(8, 2 * h - 1, [&](const std::vector<std::size_t>& idx) {
      CHECK(oracle::rel_diff(decode_inner(pick(is, idx), h), i_ref) < 1e-8);
    });
    oracle::for_each_subset(8, h, [&](const std::vector<std::size_t>& idx) {
      CHECK(oracle::rel_diff(decode_blocks(pick(bs, idx), h), b_ref) < 1e-8);
    });
  }
}

TEST_CASE("encode then decode reproduces the products for h = 1, 2, 3") {
  std::mt19937_64 rng(42);
  for (std::size_t h = 1; h <= 3; ++h) {
    const std::size_t l = 2 * h;
    const auto pts = EvalPoints::chebyshev(12);
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix D = oracle::random_symmetric(l, rng);
      const Matrix B = oracle::random_matrix(l, 2, rng);
      const Matrix C = oracle::random_matrix(l, 2, rng);
      std::vector<CodedShard> es, is, bs;
      for (std::size_t w = 0; w < pts.size(); ++w) {
        const double x = pts[w];
        es.push_back({w, x, matmul_tn(encode_D(D, h, x), encode_fR(B, h, x))});
        is.push_back({w, x, matmul_tn(encode_fL(B, h, x), encode_fR(C, h, x))});
        bs.push_back({w, x, encode_fR(C, h, x)});
      }
      CHECK(oracle::rel_diff(decode_E(es, h), oracle::naive_matmul(D, B)) < 1e-8);
      CHECK(oracle::rel_diff(decode_inner(is, h), oracle::naive_tn(B, C)) < 1e-8);
      CHECK(oracle::rel_diff(decode_blocks(bs, h), C) < 1e-8);
    }
  }
}

TEST_CASE("BlockPoly") {
  const Matrix a{{1.0}};
  const Matrix b{{2.0}};
  const BlockPoly p(3, {{0, a}, {3, b}});
  CHECK(p.degree() == 3);
  CHECK(p.coefficient(1) == nullptr);
  CHECK(p.evaluate(2.0) == Matrix{{17.0}});
  CHECK_THROWS_AS(BlockPoly(2, {{3, a}}), CodecError);
  CHECK_THROWS_AS(BlockPoly(2, {{1, a}, {1, b}}), CodecError);
  CHECK_THROWS_AS(BlockPoly(2, {{0, a}, {1, Matrix{{1.0, 2.0}}}}), CodecError);
  CHECK_THROWS_AS(BlockPoly(2, {}), CodecError);
}

TEST_CASE("shard serialisation round trip") {
  std::mt19937_64 rng(43);
  const CodedShard s{7, -0.123456789, oracle::random_matrix(2, 3, rng)};
  std::stringstream ss;
  write_shard(ss, s);
  const auto back = read_shard(ss);
  CHECK(back.worker_id == 7);
  CHECK(back.point == s.point);
  CHECK(back.payload == s.payload);
}

}
