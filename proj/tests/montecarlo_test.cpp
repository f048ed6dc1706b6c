#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "hetkey/montecarlo.hpp"

namespace hetkey {
namespace {

ModelParams two_class(std::size_t n, std::uint32_t k1, double a11, double a12, double a22) {
  SquareMatrix alpha(2);
  alpha(0, 0) = a11;
  alpha(0, 1) = alpha(1, 0) = a12;
  alpha(1, 1) = a22;
  return ModelParams{n, ClassDistribution({0.5, 0.5}), KeyProfile({k1, k1 + 5}, 10000), ChannelMatrix(alpha)};
}

ExperimentSpec k1_sweep(double a12, std::vector<double> values, std::size_t trials, std::uint64_t seed) {
  ExperimentSpec spec;
  spec.base_params = two_class(500, 10, 0.3, a12, 0.3);
  spec.axis.kind = SweepAxis::KeyRingK1;
  spec.axis.k_offsets = {0, 5};
  spec.values = std::move(values);
  spec.trials = trials;
  spec.master_seed = seed;
  return spec;
}

TEST(WilsonInterval, Boundaries) {
  EXPECT_EQ(wilson_interval(0, 400, 0.95).low, 0.0);
  EXPECT_GT(wilson_interval(0, 400, 0.95).high, 0.0);
  EXPECT_EQ(wilson_interval(400, 400, 0.95).high, 1.0);
  EXPECT_LT(wilson_interval(400, 400, 0.95).low, 1.0);
}

TEST(WilsonInterval, SymmetricAtOneHalf) {
  const auto ci = wilson_interval(200, 400, 0.95);
  EXPECT_NEAR(0.5 - ci.low, ci.high - 0.5, 1e-12);
  // z = 1.959964, half width = z/(1+z^2/T) * sqrt(1/(4T) + z^2/(4T^2))
  const double z = 1.959963984540054, t = 400.0;
  EXPECT_NEAR(ci.high - 0.5, z / (1 + z * z / t) * std::sqrt(0.25 / t + z * z / (4 * t * t)), 1e-12);
}

TEST(WilsonInterval, ContainsPointEstimate) {
  for (std::size_t t : {1u, 7u, 50u, 400u}) {
    for (std::size_t s = 0; s <= t; ++s) {
      for (double conf : {0.5, 0.9, 0.95, 0.999}) {
        const auto ci = wilson_interval(s, t, conf);
        const double phat = static_cast<double>(s) / t;
        EXPECT_LE(ci.low, phat);
        EXPECT_GE(ci.high, phat);
        EXPECT_GE(ci.low, 0.0);
        EXPECT_LE(ci.high, 1.0);
      }
    }
  }
}

TEST(WilsonInterval, RejectsBadArguments) {
  EXPECT_THROW(wilson_interval(1, 0, 0.95), InvalidParameter);
  EXPECT_THROW(wilson_interval(5, 4, 0.95), InvalidParameter);
  EXPECT_THROW(wilson_interval(1, 4, 1.0), InvalidParameter);
  EXPECT_THROW(wilson_interval(1, 4, 0.0), InvalidParameter);
}

TEST(RunTrials, CompleteGraphEveryTrial) {
  const ModelParams p{80, ClassDistribution({0.5, 0.5}), KeyProfile::relaxed({7, 8}, 12), ChannelMatrix::uniform(2, 1.0)};
  const auto stats = run_trials(p, 50, 1);
  EXPECT_EQ(stats.connected_successes, 50u);
  EXPECT_EQ(stats.no_isolated_successes, 50u);
  EXPECT_EQ(stats.mean_edge_count, 80.0 * 79.0 / 2.0);
}

TEST(RunTrials, EmptyGraphEveryTrial) {
  const auto p = two_class(120, 20, 0.0, 0.0, 0.0);
  const auto stats = run_trials(p, 40, 1);
  EXPECT_EQ(stats.no_isolated_successes, 0u);
  EXPECT_EQ(stats.connected_successes, 0u);
  EXPECT_EQ(stats.mean_isolated, 120.0);
  EXPECT_EQ(stats.sd_isolated, 0.0);
}

TEST(RunTrials, WellAboveThresholdIsConnected) {
  const auto stats = run_trials(two_class(500, 35, 0.3, 0.6, 0.3), 400, 2024);
  EXPECT_GE(stats.p_connected(), 0.95);
  EXPECT_LE(stats.connected_successes, stats.no_isolated_successes);
}

TEST(RunTrials, IndependentOfWorkerCount) {
  const auto p = two_class(300, 22, 0.3, 0.2, 0.3);
  const auto one = run_trials(p, 60, 77, 1);
  for (std::size_t workers : {2u, 3u, 8u}) {
    const auto many = run_trials(p, 60, 77, workers);
    EXPECT_EQ(one.no_isolated_successes, many.no_isolated_successes);
    EXPECT_EQ(one.connected_successes, many.connected_successes);
    EXPECT_EQ(one.mean_isolated, many.mean_isolated);
    EXPECT_EQ(one.sd_isolated, many.sd_isolated);
    EXPECT_EQ(one.mean_edge_count, many.mean_edge_count);
  }
}

TEST(RunTrials, MeanIsolatedMatchesFirstMoment) {
  // alpha_11 = alpha_22 = 0.3, alpha_12 = 0.2, K_1 = 10.
  const auto p = two_class(500, 10, 0.3, 0.2, 0.3);
  const auto stats = run_trials(p, 400, 5);
  const double se = stats.sd_isolated / std::sqrt(400.0);
  EXPECT_NEAR(stats.mean_isolated, expected_isolated(p), 3.0 * se);
}

TEST(RunTrials, MeanClassMIsolatedMatchesFirstMoment) {
  // alpha_11 = 0.4, alpha_12 = alpha_22 = 0.2: class 2 is minimizing.
  const auto p = two_class(500, 20, 0.4, 0.2, 0.2);
  ASSERT_EQ(derive(p).m, 1u);
  const auto stats = run_trials(p, 400, 6);
  EXPECT_EQ(stats.minimizing_class, 1u);
  const double se = stats.sd_class_m_isolated / std::sqrt(400.0);
  EXPECT_NEAR(stats.mean_class_m_isolated, expected_class_m_isolated(p), 3.0 * se);
}

TEST(RunSweep, SingleValueMatchesRunTrials) {
  const auto spec = k1_sweep(0.2, {22}, 30, 9);
  const auto sweep = run_sweep(spec);
  ASSERT_EQ(sweep.rows.size(), 1u);
  const auto direct = run_trials(spec.params_at(0), 30, 9);
  EXPECT_EQ(sweep.rows[0].stats.connected_successes, direct.connected_successes);
  EXPECT_EQ(sweep.rows[0].stats.mean_isolated, direct.mean_isolated);
  EXPECT_TRUE(sweep.rows[0].is_predicted_threshold);
  EXPECT_EQ(sweep.predicted_threshold, 22.0);
  EXPECT_EQ(sweep.axis, "K1");
}

TEST(RunSweep, RowsUseDisjointStreamBlocks) {
  const auto spec = k1_sweep(0.4, {15, 20, 25}, 20, 11);
  const auto sweep = run_sweep(spec, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto direct = run_trials(spec.params_at(i), 20, 11, 1, i * 20);
    EXPECT_EQ(sweep.rows[i].stats.mean_isolated, direct.mean_isolated);
    EXPECT_EQ(sweep.rows[i].stats.connected_successes, direct.connected_successes);
    EXPECT_LE(sweep.rows[i].stats.connected_successes, sweep.rows[i].stats.no_isolated_successes);
    EXPECT_NEAR(sweep.rows[i].analytic_E_In, expected_isolated(spec.params_at(i)), 0.0);
  }
  // The K1 threshold is searched over the whole integer range [15, 25]; 18 is not swept, so no row is marked.
  EXPECT_EQ(sweep.predicted_threshold, 18.0);
  for (const auto& row : sweep.rows) EXPECT_FALSE(row.is_predicted_threshold);
}

TEST(RunSweep, AlphaAxesUpdateSymmetrically) {
  ExperimentSpec spec;
  spec.base_params = two_class(200, 50, 0.2, 0.2, 0.2);
  spec.axis.kind = SweepAxis::AlphaEntry;
  spec.axis.row = 1;
  spec.axis.col = 0;
  spec.values = {0.0, 0.5};
  EXPECT_EQ(spec.params_at(1).channel(0, 1), 0.5);
  EXPECT_EQ(spec.params_at(1).channel(1, 0), 0.5);
  EXPECT_EQ(spec.axis.name(), "alpha_21");

  spec.axis.kind = SweepAxis::AlphaDiagonal;
  const auto p = spec.params_at(1);
  EXPECT_EQ(p.channel(0, 0), 0.5);
  EXPECT_EQ(p.channel(1, 1), 0.5);
  EXPECT_EQ(p.channel(0, 1), 0.2);
}

TEST(RunSweep, BipartiteBoundaryCanConnect) {
  ExperimentSpec spec;
  spec.base_params = two_class(500, 50, 0.5, 0.2, 0.5);
  spec.axis.kind = SweepAxis::AlphaDiagonal;
  spec.values = {0.0};
  spec.trials = 40;
  spec.master_seed = 3;
  const auto sweep = run_sweep(spec);
  EXPECT_GT(sweep.rows[0].stats.connected_successes, 0u);
  EXPECT_EQ(sweep.rows[0].stats.max_intra_class_edges, 0u);
}

TEST(RunSweep, InvalidValueIsNamed) {
  auto spec = k1_sweep(0.2, {10, 20, 4998}, 5, 1);
  try {
    spec.validate();
    FAIL() << "expected InvalidParameter";
  } catch (const InvalidParameter& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("#2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("K1=4998"), std::string::npos) << msg;
  }
  spec.values = {10.5};
  EXPECT_THROW(spec.validate(), InvalidParameter);
}

TEST(TransitionInterval, BracketsTheRise) {
  SweepResult sweep;
  const std::size_t successes[] = {0, 2, 30, 60, 200, 390, 400};
  for (std::size_t i = 0; i < 7; ++i) {
    SweepRow row;
    row.value = 10.0 + i;
    row.stats.trials = 400;
    row.stats.connected_successes = successes[i];
    sweep.rows.push_back(row);
  }
  const auto interval = transition_interval(sweep);
  ASSERT_TRUE(interval);
  EXPECT_EQ(interval->low, 12.0);   // 60/400 = 0.15 > 0.10, so 12 is the last <= 0.10
  EXPECT_EQ(interval->high, 15.0);  // 390/400 = 0.975
}

}  // namespace
}  // namespace hetkey
