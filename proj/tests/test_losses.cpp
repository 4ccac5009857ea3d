#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "ringnet/grad_check.hpp"
#include "ringnet/losses.hpp"
#include "test_support.hpp"

using namespace ringnet;
using test_support::random_array;

namespace {

std::vector<std::vector<std::vector<double>>> nested(const DenseArray& a) {
  std::vector<std::vector<std::vector<double>>> out(a.shape()[0]);
  for (std::size_t i = 0; i < a.shape()[0]; ++i)
    for (std::size_t j = 0; j < a.shape()[1]; ++j) {
      out[i].emplace_back();
      for (std::size_t k = 0; k < a.shape()[2]; ++k) out[i][j].push_back(a(i, j, k));
    }
  return out;
}

}  // namespace

TEST(ShapeConsistency, MarginSatisfiedGivesZero) {
  // beta_1 = beta_2 = 0, |beta_1 - beta_R|^2 = 1.
  const DenseArray betas({1, 3, 2}, {0, 0, 0, 0, 1, 0});
  EXPECT_EQ(shape_consistency_loss(betas, 0.5), 0.0);
}

TEST(ShapeConsistency, CollapsedUnmatchedGivesTwoThirds) {
  const DenseArray betas({1, 3, 2}, {0.3, -1, 0.3, -1, 0.3, -1});
  EXPECT_DOUBLE_EQ(shape_consistency_loss(betas, 0.5), 2.0 / 3.0);
}

TEST(ShapeConsistency, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseArray betas = random_array(rng, {2, 4, 5}, 0.4);
    EXPECT_NEAR(shape_consistency_loss(betas, 0.5), oracle::ring_loss(nested(betas), 0.5), 1e-12);
  }
}

TEST(ShapeConsistency, RejectsSmallRings) {
  EXPECT_THROW(shape_consistency_loss(DenseArray({1, 1, 3}), 0.5), ValueError);
}

TEST(ShapeConsistency, NonNegativeAndZeroExactlyWhenMarginsHold) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const DenseArray betas = random_array(rng, {1, 4, 3}, trial % 2 ? 0.2 : 2.0);
    const double loss = shape_consistency_loss(betas, 0.5);
    EXPECT_GE(loss, 0.0);
    bool all_hold = true;
    auto d2 = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) s += (betas(0, a, c) - betas(0, b, c)) * (betas(0, a, c) - betas(0, b, c));
      return s;
    };
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) all_hold = all_hold && d2(j, 3) - d2(j, k) >= 0.5;
    EXPECT_EQ(loss == 0.0, all_hold);
  }
}

TEST(ShapeConsistency, InvariantToMatchedPermutation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseArray betas = random_array(rng, {1, 5, 3});
    std::vector<std::size_t> perm = {0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    DenseArray permuted = betas;
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t c = 0; c < 3; ++c) permuted(0, j, c) = betas(0, perm[j], c);
    EXPECT_NEAR(shape_consistency_loss(betas, 0.5), shape_consistency_loss(permuted, 0.5), 1e-12);
  }
}

TEST(ShapeConsistency, ScalingSliceScalesSquaredDistances) {
  std::mt19937_64 rng(4);
  const DenseArray betas = random_array(rng, {1, 4, 3});
  const double c = 1.7;
  const DenseArray scaled = betas * c;
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t k = 0; k < 4; ++k) {
      double a = 0.0, b = 0.0;
      for (std::size_t d = 0; d < 3; ++d) {
        a += std::pow(betas(0, j, d) - betas(0, k, d), 2);
        b += std::pow(scaled(0, j, d) - scaled(0, k, d), 2);
      }
      EXPECT_NEAR(b, c * c * a, 1e-12);
      EXPECT_GE(b, a);
    }
}

TEST(ShapeConsistency, GradientAwayFromKinks) {
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 100) {
    const DenseArray b = random_array(rng, {8, 4}, 0.5);
    // Resample if any hinge argument is within 1e-6 of zero.
    bool near_kink = false;
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) {
          double djk = 0.0, djr = 0.0;
          for (std::size_t c = 0; c < 4; ++c) {
            djk += std::pow(b(4 * s + j, c) - b(4 * s + k, c), 2);
            djr += std::pow(b(4 * s + j, c) - b(4 * s + 3, c), 2);
          }
          near_kink = near_kink || std::abs(djk - djr + 0.5) < 1e-6;
        }
    if (near_kink) continue;
    auto fn = [](ad::Tape&, ad::Var x) { return ad::shape_consistency_loss(x, 2, 4, 0.5); };
    ASSERT_LT(grad_check(fn, b).max_relative_error, 1e-4);
    ++checked;
  }
}

TEST(Reprojection, DirectArithmetic) {
  const DenseArray kp({2, 2}, {3, 4, 0, 0});
  const DenseArray k({2, 2}, {0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(reprojection_loss(kp, k, {1, 1}, 0.41), 1.75);
}

TEST(Reprojection, LowConfidenceGivesZero) {
  const DenseArray kp({2, 2}, {3, 4, 5, 6});
  const DenseArray k({2, 2}, {0, 0, 0, 0});
  EXPECT_EQ(reprojection_loss(kp, k, {0.41, 0.2}, 0.41), 0.0);
}

TEST(Reprojection, ExactMatchGivesZero) {
  const DenseArray k({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(reprojection_loss(k, k, {1, 1}, 0.41), 0.0);
  EXPECT_THROW(reprojection_loss(DenseArray({0, 2}), DenseArray({0, 2}), {}, 0.41), ValueError);
}

TEST(Reprojection, IgnoresZeroWeightLandmarks) {
  std::mt19937_64 rng(6);
  const DenseArray kp = random_array(rng, {5, 2});
  DenseArray k = random_array(rng, {5, 2});
  const std::vector<double> conf = {1, 0, 0.9, 0.3, 1};
  const double before = reprojection_loss(kp, k, conf, 0.41);
  k(1, 0) += 100;
  k(3, 1) -= 50;
  EXPECT_EQ(reprojection_loss(kp, k, conf, 0.41), before);
}

TEST(Reprojection, GradientAwayFromKinks) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseArray kp = random_array(rng, {6, 2});
    const DenseArray k = random_array(rng, {6, 2});
    const std::vector<double> conf = {1, 0.2, 0.9, 1, 0, 1};
    auto fn = [&](ad::Tape&, ad::Var x) { return ad::reprojection_loss(x, k, conf, 0.41); };
    ASSERT_LT(grad_check(fn, kp).max_relative_error, 1e-4);
  }
}

namespace {

struct RingFixture {
  std::size_t slices = 2, ring = 3;
  ParamLayout layout{4, 2};
  DenseArray params;
  std::vector<DenseArray> projected;
  std::vector<ad::LandmarkTarget> targets;
};

RingFixture make_fixture(std::mt19937_64& rng) {
  RingFixture f;
  f.params = random_array(rng, {6, f.layout.size()});
  for (int e = 0; e < 6; ++e) {
    f.projected.push_back(random_array(rng, {5, 2}));
    f.targets.push_back({random_array(rng, {5, 2}), {1, 0.9, 0.1, 1, 0.5}});
  }
  return f;
}

}  // namespace

TEST(TotalLoss, EqualsSumOfIndependentComponents) {
  std::mt19937_64 rng(8);
  const LossWeights w;
  for (int trial = 0; trial < 20; ++trial) {
    const RingFixture f = make_fixture(rng);
    ad::Tape tape;
    std::vector<ad::Var> proj;
    for (const auto& p : f.projected) proj.push_back(tape.constant(p));
    const auto total = ad::total_loss(tape.constant(f.params), proj, f.targets, f.layout, w, 2, 3).values();

    DenseArray betas({2, 3, 4});
    double proj_mean = 0.0, beta_sq = 0.0, psi_sq = 0.0;
    for (std::size_t e = 0; e < 6; ++e) {
      for (std::size_t c = 0; c < 4; ++c) {
        betas(e / 3, e % 3, c) = f.params(e, 9 + c);
        beta_sq += f.params(e, 9 + c) * f.params(e, 9 + c);
      }
      for (std::size_t c = 0; c < 2; ++c) psi_sq += f.params(e, 13 + c) * f.params(e, 13 + c);
      proj_mean += reprojection_loss(f.projected[e], f.targets[e].positions, f.targets[e].confidence, 0.41);
    }
    const double expect = w.shape_consistency * oracle::ring_loss(nested(betas), 0.5) + w.projection * proj_mean / 6.0 +
                          w.shape_reg * beta_sq / 6.0 + w.expression_reg * psi_sq / 6.0;
    EXPECT_NEAR(total.total, expect, 1e-10);
  }
}

TEST(TotalLoss, OnlyHingeTermsSurviveForCollapsedRing) {
  // Zero params, perfect landmarks: L_tot = lambda_SC * eta (R-1)^2 n_b / (n_b R).
  const std::size_t nb = 2, ring = 4;
  const ParamLayout layout{3, 2};
  ad::Tape tape;
  std::vector<ad::Var> proj;
  std::vector<ad::LandmarkTarget> targets;
  for (std::size_t e = 0; e < nb * ring; ++e) {
    const DenseArray k({3, 2}, {1, 2, 3, 4, 5, 6});
    proj.push_back(tape.constant(k));
    targets.push_back({k, {1, 1, 1}});
  }
  const LossWeights w;
  const auto out = ad::total_loss(tape.constant(DenseArray::zeros(nb * ring, layout.size())), proj, targets, layout, w, nb, ring);
  EXPECT_DOUBLE_EQ(out.total.value().item(), w.shape_consistency * w.margin * 9.0 * nb / (nb * ring));
}

TEST(TotalLoss, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(9);
  const RingFixture f = make_fixture(rng);
  ad::Tape tape;
  std::vector<ad::Var> proj;
  for (const auto& p : f.projected) proj.push_back(tape.constant(p));
  LossWeights w;
  w.shape_consistency = w.projection = w.shape_reg = w.expression_reg = 0.0;
  EXPECT_EQ(ad::total_loss(tape.constant(f.params), proj, f.targets, f.layout, w, 2, 3).total.value().item(), 0.0);
}

TEST(TotalLoss, GradientWithRespectToParameters) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const RingFixture f = make_fixture(rng);
    auto fn = [&](ad::Tape& t, ad::Var x) {
      std::vector<ad::Var> proj;
      for (const auto& p : f.projected) proj.push_back(t.constant(p));
      // Tie projections to the parameters so both paths carry gradient.
      for (std::size_t e = 0; e < proj.size(); ++e) {
        const ad::Var shift = ad::reshape(ad::slice_cols(ad::slice_rows(x, e, e + 1), 0, 2), {1, 2});
        proj[e] = ad::add_row(proj[e], shift);
      }
      return ad::total_loss(x, proj, f.targets, f.layout, LossWeights{}, 2, 3).total;
    };
    ASSERT_LT(grad_check(fn, f.params).max_relative_error, 1e-4);
  }
}
