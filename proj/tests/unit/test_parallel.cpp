#include <gtest/gtest.h>

#include <algorithm>
#include <bit>

#include "cmpm/eval.hpp"
#include "cmpm/parallel.hpp"
#include "fixtures.hpp"

using namespace cmpm;
using cmpm::testing::protocol_dataset;
using cmpm::testing::random_dataset;
using cmpm::testing::random_similarity;
using cmpm::testing::random_state;
using cmpm::testing::relative_gap;

namespace {

const std::size_t kWorkerSweep[] = {1, 2, 4, 8};

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    if (std::bit_cast<std::uint64_t>(a.values()[i]) != std::bit_cast<std::uint64_t>(b.values()[i])) return false;
  return true;
}

}  // namespace

TEST(ParallelOneR, EqualsSerial) {
  const auto d = random_dataset(120, 34, 5);
  const auto serial = select_attributes(d, 12);
  for (auto w : kWorkerSweep) EXPECT_EQ(parallel_oner(d, 12, kDefaultOneRBins, {w, 5}), serial) << w;
}

TEST(ParallelOneR, ProtocolIllustration) {
  const auto model = parallel_oner(protocol_dataset(), 1, kDefaultOneRBins, {4, 16});
  EXPECT_EQ(model.rules[0].total_error(), 0.25);
}

TEST(ParallelOneR, KOutOfRange) {
  EXPECT_THROW(parallel_oner(random_dataset(5, 2, 1), 3, 10, {}), UsageError);
}

TEST(ParallelSimilarity, BitIdenticalToSerial) {
  const auto d = random_dataset(200, 6, 3);
  const auto serial = build_similarity(d, -0.4);
  for (auto w : kWorkerSweep) {
    const auto par = parallel_similarity(d, -0.4, {w, 7});
    EXPECT_TRUE(bit_equal(par.s, serial.s)) << w;
    EXPECT_EQ(par.preference, -0.4);
  }
}

TEST(ParallelSimilarity, MatchesGramProductOracle) {
  const auto d = random_dataset(4, 3, 12);
  const auto s = parallel_similarity(d, 0.0, {2, 2});
  // G = X X^T; distance = G_ii + G_jj - 2 G_ij
  Matrix g(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 3; ++k) g(i, j) += d.values(i, k) * d.values(j, k);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) EXPECT_NEAR(s.s(i, j), -(g(i, i) + g(j, j) - 2 * g(i, j)), 1e-12);
}

TEST(ParallelSimilarity, IdenticalRowsAreZero) {
  auto d = random_dataset(3, 4, 1);
  for (std::size_t k = 0; k < 4; ++k) d.values(2, k) = d.values(0, k);
  const auto s = parallel_similarity(d, -1, {3, 3});
  EXPECT_EQ(s.s(0, 2), 0.0);
  EXPECT_FALSE(std::signbit(s.s(0, 2)));
}

TEST(PointGrid, RoundTripsState) {
  const auto s = random_similarity(6, 1, -1.0);
  const auto st = random_state(6, 2);
  const auto grid = make_point_grid(s, st);
  EXPECT_EQ(check_grid(grid), 6u);
  const auto back = grid_state(grid);
  EXPECT_EQ(back.r, st.r);
  EXPECT_EQ(back.a, st.a);
  EXPECT_EQ(grid_similarity(grid, -1.0), s);
}

TEST(PointGrid, IncompleteGridRejected) {
  auto grid = make_point_grid(random_similarity(3, 1, -1.0));
  grid.pop_back();
  EXPECT_THROW(check_grid(grid), UsageError);
  EXPECT_THROW(parallel_responsibility(grid, 0.5, {}), UsageError);
  grid = make_point_grid(random_similarity(3, 1, -1.0));
  grid[4].x = 0;  // duplicate (0,1)
  EXPECT_THROW(parallel_availability(grid, 0.5, {}), UsageError);
  grid[4].x = 9;
  EXPECT_THROW(parallel_exemplar_select(grid, {}), UsageError);
  EXPECT_THROW(check_grid({}), UsageError);
}

TEST(ParallelResponsibility, MatchesSerial) {
  for (auto conv : {DampingConvention::new_term, DampingConvention::old_term})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = random_similarity(5, seed, -1.0);
      auto st = random_state(5, seed + 50);
      const auto grid = make_point_grid(s, st);
      update_responsibility(s, st, 0.8, conv);
      for (auto w : kWorkerSweep) {
        const auto out = parallel_responsibility(grid, 0.8, {w, 3}, conv);
        EXPECT_EQ(check_grid(out), 5u);
        EXPECT_TRUE(bit_equal(grid_state(out).r, st.r));
        EXPECT_TRUE(bit_equal(grid_state(out).a, st.a));
      }
    }
}

TEST(ParallelResponsibility, FirstStepFromZero) {
  const auto s = random_similarity(6, 9, -2.0);
  const auto out = grid_state(parallel_responsibility(make_point_grid(s), 0.8, {2, 4}, DampingConvention::new_term));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 6; ++k) {
      double best = -1e300;
      for (std::size_t kk = 0; kk < 6; ++kk)
        if (kk != k) best = std::max(best, s.s(i, kk));
      EXPECT_EQ(out.r(i, k), 0.8 * (s.s(i, k) - best));
    }
}

TEST(ParallelAvailability, MatchesSerial) {
  for (auto conv : {DampingConvention::new_term, DampingConvention::old_term})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = random_similarity(5, seed, -1.0);
      auto st = random_state(5, seed + 7);
      const auto grid = make_point_grid(s, st);
      update_availability(st, 0.8, conv);
      for (auto w : kWorkerSweep) {
        const auto out = parallel_availability(grid, 0.8, {w, 2}, conv);
        EXPECT_EQ(check_grid(out), 5u);
        EXPECT_TRUE(bit_equal(grid_state(out).a, st.a));
      }
    }
}

TEST(ParallelAvailability, ZeroResponsibilityLeavesZero) {
  const auto grid = make_point_grid(random_similarity(4, 1, -1.0));
  for (const auto& c : parallel_availability(grid, 0.8, {4, 4})) EXPECT_EQ(c.a, 0.0);
}

TEST(ParallelExemplars, MatchesSerialOnRandomStates) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 1 + seed % 8;
    const auto s = random_similarity(n, seed, -1.0);
    const auto st = random_state(n, seed + 3);
    const auto serial = select_exemplars(st, s);
    const auto grid = make_point_grid(s, st);
    EXPECT_EQ(parallel_exemplar_candidates(grid, {2, 3}), exemplar_candidates(st));
    for (auto w : kWorkerSweep) {
      const auto par = parallel_exemplar_select(grid, {w, 3});
      EXPECT_TRUE(par.same_clustering(serial));
      EXPECT_EQ(par.fitness, serial.fitness);
    }
  }
}

TEST(ParallelExemplars, FallbackParity) {
  const auto s = random_similarity(5, 4, -1.0);
  auto st = MessageState::zeros(5);
  for (std::size_t k = 0; k < 5; ++k) st.r(k, k) = -1.0 - static_cast<double>((k * 3) % 5);
  const auto par = parallel_exemplar_select(make_point_grid(s, st), {3, 2});
  EXPECT_EQ(par.exemplars, select_exemplars(st, s).exemplars);
  EXPECT_EQ(par.exemplars.size(), 1u);
}

TEST(ParallelExemplars, SinglePoint) {
  SimilarityMatrix s{Matrix(1, 1, -1.0), -1.0};
  const auto es = parallel_exemplar_select(make_point_grid(s), {});
  EXPECT_EQ(es.exemplars, (std::vector<std::size_t>{0}));
  EXPECT_EQ(es.assignment, (std::vector<std::size_t>{0}));
}

TEST(RunApParallel, EqualsSerialOnBlobs) {
  const auto raw = synth_data_gen(300, 4, 6, 0.3, 21);
  const auto d = apply_normalizer(fit_normalizer(raw), raw);
  const auto [lo, hi] = suggest_preference_range(build_similarity(d, 0));
  APConfig cfg;
  cfg.preference = lo + 0.5 * (hi - lo);
  cfg.max_iter = 300;
  cfg.conv_window = 20;
  const auto serial = run_ap(d, cfg);
  for (std::size_t w : {1, 4}) {
    const auto par = run_ap_parallel(d, cfg, {w, 16});
    EXPECT_TRUE(par.same_clustering(serial)) << w;
    EXPECT_EQ(par.fitness, serial.fitness);
    EXPECT_EQ(par.iterations, serial.iterations);
    EXPECT_EQ(par.converged, serial.converged);
  }
}
