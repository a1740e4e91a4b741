#include <gtest/gtest.h>

#include "oracles.hpp"

TEST(Oracles, IqIsOneHalf) {
  // d/dt[(t^2+1) exp(-2 t atan t)] = -2 atan(t) (t^2+1) exp(-2 t atan t).
  EXPECT_NEAR(oracle::iq(60.0), oracle::kIq, 1e-11);
  EXPECT_LT(oracle::iq_tail_bound(60.0), 1e-70);
}

TEST(Oracles, KernelNormMatchesHighPrecisionValue) {
  EXPECT_NEAR(oracle::kernel_norm_sq(60.0), oracle::kNormSq, 1e-11);
  EXPECT_NEAR(oracle::kernel_norm_sq(40.0), oracle::kNormSq, 1e-11);
}

TEST(Oracles, CrossingFormValue) {
  EXPECT_NEAR(oracle::example_crossing_form(), oracle::kForm, 1e-11);
  EXPECT_LT(oracle::example_crossing_form(), 0.0);
}

TEST(Oracles, ExampleGap) {
  EXPECT_DOUBLE_EQ(oracle::example_gap(0.0), 0.0);
  EXPECT_NEAR(oracle::example_gap(std::numbers::pi), 1.0, 1e-15);
  EXPECT_TRUE(oracle::example_degenerate(2.0 * std::numbers::pi));
  EXPECT_FALSE(oracle::example_degenerate(0.1));
}
