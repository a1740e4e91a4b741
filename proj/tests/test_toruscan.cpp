#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hamflow/toruscan.hpp"
#include "oracles.hpp"

using namespace hamflow;

namespace {

constexpr double kPi = std::numbers::pi;

// Distance in cells from cell (i, j) at resolution r to the set sum = 0 mod 2pi.
double cells_from_diagonal(const ScanCell& c, std::size_t r) {
  const double h = 2 * kPi / static_cast<double>(r);
  const double sum = c.angles[0] + c.angles[1];
  return std::abs(std::remainder(sum, 2 * kPi)) / h;
}

}  // namespace

TEST(ParallelFor, CoversEveryIndexOnce) {
  for (std::size_t workers : {1u, 2u, 4u, 16u}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, workers, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (std::size_t workers : {1u, 3u}) {
    try {
      parallel_for(50, workers, [](std::size_t i) {
        if (i == 17 || i == 31) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(BoxDimension, SlopeOfCounts) {
  EXPECT_NEAR(*box_dimension({8, 16, 32}, {8, 16, 32}), 1.0, 1e-12);
  EXPECT_NEAR(*box_dimension({8, 16, 32}, {64, 256, 1024}), 2.0, 1e-12);
  EXPECT_FALSE(box_dimension({8, 16, 32}, {0, 0, 5}).has_value());
}

TEST(ChernVector, ExampleFamilies) {
  const auto c1 = chern_vector(example_family(1));
  EXPECT_EQ(c1.components, std::vector<int>{-1});
  ScanOptions two;
  two.workers = 2;
  const auto c2 = chern_vector(example_family(2), two);
  EXPECT_EQ(c2.components, (std::vector<int>{-1, -1}));
  EXPECT_TRUE(c2.nonzero());
  ASSERT_EQ(c2.loops.size(), 2u);
  // Loop 2 reproduces loop 1: the crossing sits at the same instant.
  ASSERT_EQ(c2.loops[0].crossings.size(), 1u);
  ASSERT_EQ(c2.loops[1].crossings.size(), 1u);
  EXPECT_NEAR(c2.loops[0].crossings[0].lambda0, c2.loops[1].crossings[0].lambda0, 1e-6);
  EXPECT_EQ(c2.shifts, (std::vector<double>{0.0, 0.0}));
}

TEST(ChernVector, CompactControlIsZero) {
  const auto c = chern_vector(compact_control_family(2));
  EXPECT_EQ(c.components, (std::vector<int>{0, 0}));
  EXPECT_FALSE(c.nonzero());
  for (const auto& l : c.loops) EXPECT_TRUE(l.crossings.empty());
}

TEST(ChernVector, ShiftsDegenerateBasePoint) {
  // With Theta_2 = pi the Theta_1 loop starts on the degeneracy set.
  const auto f = example_family(2);
  ScanOptions opts;
  const auto c = chern_vector(f, TorusPoint({0.0, kPi}), opts);
  EXPECT_NE(c.shifts[0], 0.0);
  EXPECT_NEAR(std::abs(c.shifts[0]), 2 * kPi / 64, 1e-12);
  EXPECT_EQ(c.components[0], -1);
}

TEST(ChernVector, BasePointErrorWhenEverythingIsDegenerate) {
  const auto zero = constant_family(1, SymMatrix(Matrix(2, 2)), "zero");
  ScanOptions opts;
  opts.probe = 4;
  EXPECT_THROW(chern_vector(zero, opts), BasePointError);
  EXPECT_THROW(chern_vector(example_family(2), TorusPoint({0.0}), opts), ValidationError);
}

TEST(Loops, OrientationReversalNegates) {
  const auto path = HomoclinicPath::coordinate_loop(example_family(1), 0, TorusPoint({0.0}));
  EXPECT_EQ(sfl_crossing(path.reversed()).value, 1);
}

TEST(Loops, ReparametrizationInvariance) {
  const auto path = HomoclinicPath::coordinate_loop(example_family(1), 0, TorusPoint({0.0}));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> amp(-0.9, 0.9);
  for (int i = 0; i < 3; ++i) {
    const double a = amp(rng);
    // s + a sin(s) is an increasing self-map of [-pi, pi] for |a| < 1.
    const auto re = path.reparametrized([a](double s) { return s + a * std::sin(s); },
                                        [a](double s) { return 1 + a * std::cos(s); });
    EXPECT_EQ(sfl_crossing(re).value, -1) << "amplitude " << a;
  }
}

TEST(Loops, HomotopicPerturbationKeepsFlow) {
  const auto f = example_family(2);
  // Theta_1 loop with Theta_2 = 0.1 sin(Theta_1): same base point, same class.
  const HomoclinicPath loop(
      f, {-kPi, kPi}, [](double s) { return std::vector<double>{s, 0.1 * std::sin(s)}; },
      [](double s) { return std::vector<double>{1.0, 0.1 * std::cos(s)}; });
  // The perturbation stays off the degeneracy set except where the sum vanishes.
  for (double s = -kPi; s <= kPi; s += 0.01) {
    const double sum = s + 0.1 * std::sin(s);
    if (std::abs(s) > 1e-9) {
      EXPECT_FALSE(oracle::example_degenerate(sum, 1e-6));
    }
  }
  const auto r = sfl_crossing(loop);
  EXPECT_EQ(r.value, -1);
  ASSERT_EQ(r.crossings.size(), 1u);
  EXPECT_NEAR(r.crossings[0].lambda0, 0.0, 1e-6);
}

TEST(Loops, DiagonalProbe) {
  const auto f = example_family(2);
  const double d = 0.1;
  const auto path = HomoclinicPath::through(
      f, {TorusPoint({-kPi + d, -kPi + d}), TorusPoint({0.0, 0.0}), TorusPoint({kPi - d, kPi - d})});
  for (double s : {0.2, 1.0, 2.5, 4.0, 6.0, 8.0}) {
    const auto p = path.point(s);
    EXPECT_NEAR(path.gap(s), oracle::example_gap(p.sum()), 1e-5);
  }
  const auto crossings = find_crossings(path);
  ASSERT_EQ(crossings.size(), 1u);
  const auto at = path.point(crossings[0]);
  EXPECT_NEAR(at[0], 0.0, 1e-6);
  EXPECT_NEAR(at[1], 0.0, 1e-6);
  // The endpoints at Theta_1 = +-pi lie on the degeneracy set too.
  EXPECT_EQ(kernel_dim(boundary_data(f, TorusPoint({kPi, kPi}))), 1u);
  EXPECT_EQ(kernel_dim(boundary_data(f, TorusPoint({-kPi, -kPi}))), 1u);
}

TEST(Certify, ExampleFamilyOnT2) {
  const auto cert = certify(example_family(2));
  EXPECT_TRUE(cert.invertible_point.equivalent(TorusPoint({kPi, 0.0})));
  EXPECT_NEAR(cert.gap, 1.0, 1e-6);
  EXPECT_EQ(cert.nonzero_component, 1u);
  EXPECT_EQ(cert.value, -1);
  EXPECT_EQ(cert.chern.components, (std::vector<int>{-1, -1}));
  EXPECT_NE(cert.conclusion.find("covering dimension at least 1"), std::string::npos);
}

TEST(Certify, ExampleFamilyOnT3) {
  ScanOptions opts;
  opts.workers = 3;
  const auto cert = certify(example_family(3), opts);
  EXPECT_FALSE(oracle::example_degenerate(cert.invertible_point.sum(), 1e-3));
  EXPECT_EQ(cert.chern.components, (std::vector<int>{-1, -1, -1}));
  EXPECT_NE(cert.conclusion.find("covering dimension at least 2"), std::string::npos);
}

TEST(Certify, CompactControlFailsHypothesisTwo) {
  try {
    certify(compact_control_family(2));
    FAIL() << "expected CertificateUnavailable";
  } catch (const CertificateUnavailable& e) {
    EXPECT_NE(std::string(e.what()).find("(ii)"), std::string::npos);
    EXPECT_EQ(e.name(), "CertificateUnavailable");
  }
}

TEST(Scan, MatchesClosedFormDegeneracySet) {
  ScanOptions opts;
  opts.workers = 2;
  const auto rep = scan_degeneracy(example_family(2), 8, kRankTol, opts);
  ASSERT_EQ(rep.levels.size(), 3u);
  EXPECT_TRUE(rep.warnings.empty());
  for (const auto& level : rep.levels) {
    const std::size_t r = level.resolution;
    EXPECT_EQ(level.cells.size(), r * r);
    std::size_t oracle_count = 0;
    for (const auto& c : level.cells) {
      const bool closed_form = oracle::example_degenerate(c.angles[0] + c.angles[1], 1e-9);
      oracle_count += closed_form;
      EXPECT_EQ(c.kernel_dim > 0, closed_form) << "cell " << c.index[0] << "," << c.index[1];
      if (c.kernel_dim > 0) {
        EXPECT_LE(cells_from_diagonal(c, r), 1.0);
      }
      EXPECT_NEAR(c.gap, oracle::example_gap(c.angles[0] + c.angles[1]), 1e-5);
    }
    EXPECT_EQ(level.degenerate_count(), oracle_count);
  }
  ASSERT_TRUE(rep.dimension_estimate.has_value());
  EXPECT_NEAR(*rep.dimension_estimate, 1.0, 0.15);
}

TEST(Scan, ResolutionDoublingContainment) {
  const auto rep = scan_degeneracy(example_family(2), 8);
  // Every flagged cell at r lies within one cell of a flagged cell at 2r.
  for (std::size_t l = 0; l + 1 < rep.levels.size(); ++l) {
    const auto coarse = rep.levels[l].degenerate_cells();
    const auto fine = rep.levels[l + 1].degenerate_cells();
    const double h = 2 * kPi / static_cast<double>(rep.levels[l + 1].resolution);
    for (const ScanCell* c : coarse) {
      bool near = false;
      for (const ScanCell* f : fine)
        near = near || (std::abs(TorusPoint::arc(c->angles[0], f->angles[0])) <= 1.5 * h &&
                        std::abs(TorusPoint::arc(c->angles[1], f->angles[1])) <= 1.5 * h);
      EXPECT_TRUE(near);
    }
  }
}

TEST(Scan, CompactControlIsEmpty) {
  const auto rep = scan_degeneracy(compact_control_family(1), 8);
  for (const auto& l : rep.levels) EXPECT_EQ(l.degenerate_count(), 0u);
  EXPECT_FALSE(rep.dimension_estimate.has_value());
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_THROW(scan_degeneracy(compact_control_family(1), 4), ValidationError);
}

TEST(Scan, WorkerCountDoesNotChangeResults) {
  ScanOptions one, four;
  four.workers = 4;
  const auto a = scan_level(example_family(2), 8, kRankTol, one);
  const auto b = scan_level(example_family(2), 8, kRankTol, four);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].index, b.cells[i].index);
    EXPECT_EQ(a.cells[i].kernel_dim, b.cells[i].kernel_dim);
    EXPECT_EQ(a.cells[i].gap, b.cells[i].gap);
  }
}
