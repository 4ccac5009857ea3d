#include <gtest/gtest.h>

#include <random>

#include "ringnet/camera.hpp"
#include "ringnet/grad_check.hpp"
#include "test_support.hpp"

using namespace ringnet;
using test_support::random_array;
using test_support::small_model;

TEST(Project, IdentityCamera) {
  const DenseArray k = project(DenseArray({1, 3}, {2, 3, 7}), {1.0, 0.0, 0.0});
  EXPECT_EQ(k, DenseArray({1, 2}, {2, 3}));
}

TEST(Project, ScaleAndTranslation) {
  const DenseArray k = project(DenseArray({1, 3}, {1, 1, 0}), {2.0, 10.0, -5.0});
  EXPECT_EQ(k, DenseArray({1, 2}, {12, -3}));
}

TEST(Project, IgnoresDepth) {
  const CameraParams c{1.7, 3.0, 4.0};
  EXPECT_EQ(project(DenseArray({1, 3}, {1, 2, -50}), c), project(DenseArray({1, 3}, {1, 2, 80}), c));
}

TEST(Project, RejectsNonPositiveScale) {
  EXPECT_THROW(project(DenseArray({1, 3}, {1, 2, 3}), {0.0, 0.0, 0.0}), ValueError);
  EXPECT_THROW(project(DenseArray({1, 3}, {1, 2, 3}), {-1.0, 0.0, 0.0}), ValueError);
}

TEST(Project, AffineConsistencyUnderInPlaneTranslation) {
  std::mt19937_64 rng(1);
  const DenseArray pts = random_array(rng, {10, 3}, 20.0);
  const CameraParams c{1.3, 100.0, 90.0};
  DenseArray moved = pts;
  for (std::size_t i = 0; i < 10; ++i) {
    moved(i, 0) += 4.0;
    moved(i, 1) -= 2.5;
  }
  const DenseArray a = project(pts, c), b = project(moved, c);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(b(i, 0) - a(i, 0), 1.3 * 4.0, 1e-12);
    EXPECT_NEAR(b(i, 1) - a(i, 1), -1.3 * 2.5, 1e-12);
  }
}

TEST(Project, GradientsPassGradCheck) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseArray pts = random_array(rng, {6, 3});
    const DenseArray w = random_array(rng, {6, 2});
    DenseArray point = random_array(rng, {1, 21});
    point[18] = 0.5 + std::abs(point[18]);
    auto fn = [&](ad::Tape& t, ad::Var x) {
      const ad::Var p = ad::reshape(ad::slice_cols(x, 0, 18), {6, 3});
      const ad::Var c = ad::slice_cols(x, 18, 21);
      return ad::sum(ad::mul(ad::project(p, c), t.constant(w)));
    };
    ASSERT_LT(grad_check(fn, point).max_relative_error, 1e-4);
  }
}

TEST(StaticLandmarks, BarycentricCorners) {
  const HeadModel& m = small_model();
  const Face& f = m.faces[5];
  const DenseArray first = static_landmarks3d(m.template_vertices, m.faces, {{5, {1.0, 0.0, 0.0}}});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(first(0, k), m.template_vertices(f[0], k));
  const double third = 1.0 / 3.0;
  const DenseArray centroid = static_landmarks3d(m.template_vertices, m.faces, {{5, {third, third, third}}});
  for (std::size_t k = 0; k < 3; ++k) {
    const double c = (m.template_vertices(f[0], k) + m.template_vertices(f[1], k) + m.template_vertices(f[2], k)) / 3.0;
    EXPECT_NEAR(centroid(0, k), c, 1e-12);
  }
}

TEST(StaticLandmarks, MatchesDirectWeightedSum) {
  const HeadModel& m = small_model();
  std::mt19937_64 rng(3);
  const DenseArray verts = random_array(rng, {m.num_vertices(), 3}, 50.0);
  std::uniform_int_distribution<std::uint32_t> tri(0, static_cast<std::uint32_t>(m.faces.size() - 1));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SurfacePoint> pts(30);
  for (auto& p : pts) {
    p.triangle = tri(rng);
    double a = u(rng), b = u(rng), c = u(rng), s = a + b + c;
    p.bary = {a / s, b / s, c / s};
  }
  const DenseArray out = static_landmarks3d(verts, m.faces, pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      double expect = 0.0;
      for (int c = 0; c < 3; ++c) expect += pts[i].bary[static_cast<std::size_t>(c)] * verts(m.faces[pts[i].triangle][static_cast<std::size_t>(c)], k);
      EXPECT_NEAR(out(i, k), expect, 1e-12);
    }
}

TEST(StaticLandmarks, RejectsBadTriangle) {
  const HeadModel& m = small_model();
  EXPECT_THROW(static_landmarks3d(m.template_vertices, m.faces, {{static_cast<std::uint32_t>(m.faces.size()), {1, 0, 0}}}),
               DimensionError);
}

namespace {

// Two-sample table per landmark: triangle 0 corner at -10 deg, triangle 1 corner at +10 deg.
std::vector<std::vector<ContourSample>> two_sample_table() {
  return {{{-10.0, {0, {1.0, 0.0, 0.0}}}, {10.0, {1, {0.0, 1.0, 0.0}}}}};
}

}  // namespace

TEST(DynamicLandmarks, SampleEndpointsMidpointAndClamp) {
  const HeadModel& m = small_model();
  const auto table = two_sample_table();
  const DenseArray& v = m.template_vertices;
  const std::size_t a = m.faces[0][0], b = m.faces[1][1];
  const DenseArray at_lower = dynamic_landmarks3d(v, m.faces, table, -10.0);
  const DenseArray mid = dynamic_landmarks3d(v, m.faces, table, 0.0);
  const DenseArray beyond = dynamic_landmarks3d(v, m.faces, table, 55.0);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(at_lower(0, k), v(a, k));
    EXPECT_NEAR(mid(0, k), 0.5 * (v(a, k) + v(b, k)), 1e-12);
    EXPECT_EQ(beyond(0, k), v(b, k));
  }
}

TEST(DynamicLandmarks, EmptyTableIsError) {
  const HeadModel& m = small_model();
  EXPECT_THROW(dynamic_landmarks3d(m.template_vertices, m.faces, {{}}, 0.0), ValueError);
}

TEST(DynamicLandmarks, ContinuousInYaw) {
  const HeadModel& m = small_model();
  double prev_change = 1e9;
  for (double dyaw : {1.0, 0.1, 0.01, 0.001}) {
    double worst = 0.0;
    for (double yaw = -40.0; yaw <= 40.0 - dyaw; yaw += 0.7) {
      const DenseArray a = dynamic_landmarks3d(m.template_vertices, m.faces, m.landmarks.contour, yaw);
      const DenseArray b = dynamic_landmarks3d(m.template_vertices, m.faces, m.landmarks.contour, yaw + dyaw);
      worst = std::max(worst, max_abs_difference(a, b));
    }
    EXPECT_LE(worst, prev_change);
    prev_change = worst;
  }
  EXPECT_LT(prev_change, 0.05);
}

TEST(DynamicLandmarks, MirroredSides) {
  // Left and right contour trajectories mirror each other across x = 0 with yaw negated.
  const HeadModel& m = test_support::desk_model();
  for (double yaw : {-30.0, -5.0, 0.0, 20.0, 40.0}) {
    const DenseArray a = dynamic_landmarks3d(m.template_vertices, m.faces, m.landmarks.contour, yaw);
    const DenseArray b = dynamic_landmarks3d(m.template_vertices, m.faces, m.landmarks.contour, -yaw);
    for (std::size_t l = 0; l < 8; ++l) {
      EXPECT_NEAR(a(l, 0), -b(16 - l, 0), 1e-3);
      EXPECT_NEAR(a(l, 1), b(16 - l, 1), 1e-3);
    }
  }
}

TEST(Landmarks, ProjectedGradientsPassGradCheck) {
  const HeadModel& m = small_model();
  const ParamLayout layout = ParamLayout::of(m);
  const CameraFrame frame = model_frame(m);
  std::mt19937_64 rng(4);
  int checked = 0;
  while (checked < 10) {
    DenseArray point = random_array(rng, {1, layout.size()}, 0.25);
    const DenseArray w = random_array(rng, {m.landmarks.size(), 2});
    auto fn = [&](ad::Tape& t, ad::Var params) {
      const ModelTerms terms(t, m);
      return ad::sum(ad::mul(ad::projected_landmarks(terms, params, frame), t.constant(w)));
    };
    // Skip points whose yaw sits within a finite-difference step of a trajectory sample.
    const double yaw = yaw_degrees(rodrigues(point.values().subspan(3, 3)));
    if (std::abs(std::remainder(yaw, 5.0)) < 1e-3) continue;
    ASSERT_LT(grad_check(fn, point).max_relative_error, 1e-4);
    ++checked;
  }
}

TEST(BoundingBox, UnitSquareExpansion) {
  Landmarks2D lm{DenseArray({4, 2}, {0, 0, 1, 0, 0, 1, 1, 1}), {1, 1, 1, 1}};
  const BoundingBox b = bounding_box(lm);
  EXPECT_NEAR(b.xmin, -0.1, 1e-15);
  EXPECT_NEAR(b.ymin, -0.3, 1e-15);
  EXPECT_NEAR(b.xmax, 1.1, 1e-15);
  EXPECT_NEAR(b.ymax, 1.05, 1e-15);
}

TEST(BoundingBox, SingleLandmarkIsDegenerate) {
  Landmarks2D lm{DenseArray({1, 2}, {3, 4}), {1}};
  const BoundingBox b = bounding_box(lm);
  EXPECT_EQ(b.xmin, 3);
  EXPECT_EQ(b.xmax, 3);
  EXPECT_EQ(b.ymin, 4);
  EXPECT_EQ(b.ymax, 4);
}

TEST(BoundingBox, IgnoresZeroConfidence) {
  Landmarks2D lm{DenseArray({3, 2}, {0, 0, 1, 1, 500, -500}), {1, 1, 0}};
  const BoundingBox b = bounding_box(lm);
  EXPECT_NEAR(b.xmax, 1.1, 1e-15);
  EXPECT_THROW(bounding_box(Landmarks2D{DenseArray({1, 2}, {0, 0}), {0.0}}), ValueError);
}

TEST(CameraFrame, ZeroParametersFillNormalizedBox) {
  const HeadModel& m = small_model();
  const CameraFrame frame = model_frame(m);
  const DenseArray k = projected_landmarks(m, ParamVector::zeros(ParamLayout::of(m)), frame);
  Landmarks2D lm{k, std::vector<double>(k.rows(), 1.0)};
  const BoundingBox b = bounding_box(lm);
  EXPECT_NEAR(b.centre_x(), 0.0, 1e-9);
  EXPECT_NEAR(b.centre_y(), 0.0, 1e-9);
  EXPECT_NEAR(std::max(b.width(), b.height()), 2.0, 1e-9);
}
