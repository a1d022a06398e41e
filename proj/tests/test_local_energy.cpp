#include "selfrep/local_energy.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace selfrep;
using selfrep::testing::central_difference;
using selfrep::testing::jittered_identity;
using selfrep::testing::relative_error;
using selfrep::testing::rotation;

namespace {

std::vector<Vec2> affine(const Mesh& m, const Mat2& A, const Vec2& b = Vec2::Zero()) {
  std::vector<Vec2> y;
  for (const auto& x : m.vertices()) y.push_back(A * x + b);
  return y;
}

double elastic_value(const Mesh& m, const std::vector<Vec2>& y, double p, double r) {
  return elastic_energy(m, DeformationField(m, y), p, r, false).value;
}

}  // namespace

TEST(ElementGradients, AffineMaps) {
  const Mesh m = build_structured_square(3);
  const DeformationField id = DeformationField::identity(m);
  for (const auto& st : id.state()) {
    EXPECT_LE((st.F - Mat2::Identity()).norm(), 1e-14);
    EXPECT_NEAR(st.det, 1.0, 1e-15);
    EXPECT_NEAR(st.frob2, 2.0, 1e-15);
  }
  const DeformationField dil(m, affine(m, 2.0 * Mat2::Identity()));
  for (const auto& st : dil.state()) {
    EXPECT_NEAR(st.det, 4.0, 1e-14);
    EXPECT_NEAR(st.frob2, 8.0, 1e-14);
  }
  Mat2 shear;
  shear << 1.0, 0.5, 0.0, 1.0;
  const DeformationField sheared(m, affine(m, shear));
  for (const auto& st : sheared.state()) {
    EXPECT_LE((st.F - shear).norm(), 1e-14);
    EXPECT_NEAR(st.det, 1.0, 1e-14);
    EXPECT_NEAR(st.frob2, 2.25, 1e-14);
  }
}

TEST(ElementGradients, SizeMismatchThrows) {
  const Mesh m = build_structured_square(2);
  EXPECT_THROW(DeformationField(m, std::vector<Vec2>(3)), MeshError);
}

TEST(ElasticEnergy, IdentityAndDilationClosedForms) {
  for (int n : {1, 4, 13, 32}) {
    const Mesh m = build_structured_square(n);
    EXPECT_NEAR(elastic_value(m, m.vertices(), 4, 3), 5.0, 1e-12) << n;
    EXPECT_NEAR(elastic_value(m, affine(m, 2.0 * Mat2::Identity()), 4, 3), 64.0 + 1.0 / 64.0, 1e-12) << n;
  }
}

TEST(ElasticEnergy, ExactOnRandomAffineMaps) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  const Mesh coarse = build_half_annulus(2), fine = build_half_annulus(7);
  for (int k = 0; k < 10; ++k) {
    Mat2 A = Mat2::Identity();
    A(0, 0) += u(rng);
    A(0, 1) += u(rng);
    A(1, 0) += u(rng);
    A(1, 1) += u(rng);
    if (A.determinant() <= 0.05) continue;
    const double p = 3.0, r = 2.5;
    for (const Mesh* m : {&coarse, &fine}) {
      const double expected = m->total_area() * (std::pow(A.squaredNorm(), p / 2) + std::pow(A.determinant(), -r));
      EXPECT_NEAR(elastic_value(*m, affine(*m, A, Vec2(3, -1)), p, r), expected, 1e-12 * expected);
    }
  }
}

TEST(ElasticEnergy, GradientMatchesCentralDifferences) {
  const Mesh m = build_structured_square(4);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = jittered_identity(m, 0.3, rng);
    const ElasticResult res = elastic_energy(m, DeformationField(m, y), 4.0, 3.0);
    const auto fd = central_difference([&](const std::vector<Vec2>& z) { return elastic_value(m, z, 4.0, 3.0); }, y,
                                       1e-6);
    EXPECT_LT(relative_error(res.gradient, fd), 1e-5) << "trial " << trial;
  }
}

TEST(ElasticEnergy, RigidMotionInvariance) {
  const Mesh m = build_structured_square(6);
  std::mt19937_64 rng(3);
  const auto y = jittered_identity(m, 0.3, rng);
  const double base = elastic_value(m, y, 4.0, 3.0);
  for (double angle : {0.3, 1.7, -2.9}) {
    std::vector<Vec2> z;
    for (const auto& p : y) z.push_back(rotation(angle) * p + Vec2(5.0, -2.0));
    EXPECT_NEAR(elastic_value(m, z, 4.0, 3.0), base, 1e-10 * base);
  }
}

TEST(ElasticEnergy, DetTermBlowsUpMonotonically) {
  // Moving vertex (1,1) of the n=1 square toward (0,0) collapses triangle 0.
  const Mesh m = build_structured_square(1);
  double previous = 0.0;
  for (double det = 0.09; det > 1e-6; det *= 0.5) {
    auto y = m.vertices();
    y[3] = Vec2(det, det);  // both triangles then have determinant `det`
    const DeformationField f(m, y);
    ASSERT_TRUE(f.admissible());
    const double value = elastic_energy(m, f, 4.0, 3.0, false).det_term;
    EXPECT_GT(value, previous);
    previous = value;
  }
}

TEST(ElasticEnergy, InadmissibleSignal) {
  const Mesh m = build_structured_square(2);
  auto y = m.vertices();
  y[4] = Vec2(2.0, 2.0);  // pushes the center vertex past the corner
  const ElasticResult res = elastic_energy(m, DeformationField(m, y), 4.0, 3.0);
  EXPECT_EQ(res.status, EvalStatus::inadmissible);
  EXPECT_TRUE(std::isinf(res.value));
  ASSERT_GE(res.worst_element, 0);
  EXPECT_LE(DeformationField(m, y).state()[res.worst_element].det, 0.0);
}

TEST(ElasticEnergy, WorkerCountDoesNotChangeBits) {
  const Mesh m = build_half_annulus(9);
  std::mt19937_64 rng(8);
  const DeformationField f(m, jittered_identity(m, 0.2, rng));
  const ElasticResult one = elastic_energy(m, f, 4.0, 3.0, true, 1);
  for (int w : {2, 3, 8}) {
    const ElasticResult many = elastic_energy(m, f, 4.0, 3.0, true, w);
    EXPECT_EQ(one.value, many.value);
    for (std::size_t v = 0; v < one.gradient.size(); ++v) EXPECT_EQ(one.gradient[v], many.gradient[v]);
  }
}

TEST(Distortion, ClosedForms) {
  const Mesh m = build_structured_square(4);
  ModelParams params;  // p = 4, r = 3, kappa = 6/5
  const DistortionReport id = distortion_diagnostic(m, DeformationField::identity(m), params);
  for (double k : id.per_element) EXPECT_NEAR(k, 2.0, 1e-15);
  EXPECT_NEAR(id.kappa, 1.2, 1e-15);
  EXPECT_NEAR(id.norm, 2.0 * std::pow(1.0, 1.0 / 1.2), 1e-14);

  const DistortionReport dil = distortion_diagnostic(m, DeformationField(m, affine(m, 3.5 * Mat2::Identity())), params);
  for (double k : dil.per_element) EXPECT_NEAR(k, 2.0, 1e-14);

  Mat2 stretch;
  stretch << 2.0, 0.0, 0.0, 0.5;
  const DistortionReport st = distortion_diagnostic(m, DeformationField(m, affine(m, stretch)), params);
  for (double k : st.per_element) EXPECT_NEAR(k, 4.25, 1e-14);
}

TEST(Distortion, RejectsInadmissible) {
  const Mesh m = build_structured_square(2);
  Mat2 flip;
  flip << -1.0, 0.0, 0.0, 1.0;
  EXPECT_THROW(distortion_diagnostic(m, DeformationField(m, affine(m, flip)), ModelParams{}), InadmissibleField);
}
