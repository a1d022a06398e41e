#include "selfrep/nonlocal_energy.hpp"
#include "selfrep/scenario.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace selfrep;
using selfrep::testing::central_difference;
using selfrep::testing::jittered_identity;
using selfrep::testing::relative_error;
using selfrep::testing::rotation;

namespace {

const QuadratureSpec kCentroid{};

// Straightforward double loop over centroids, written independently of the
// library's carrier machinery.
double dense_bulk(const Mesh& m, const std::vector<Vec2>& y, double q, double s, const std::vector<int>& ids) {
  const DeformationField f(m, y);
  double sum = 0.0;
  for (int a : ids) {
    for (int b : ids) {
      if (a == b) continue;
      const auto& ta = m.triangles()[a];
      const auto& tb = m.triangles()[b];
      const Vec2 xa = (m.vertices()[ta[0]] + m.vertices()[ta[1]] + m.vertices()[ta[2]]) / 3.0;
      const Vec2 xb = (m.vertices()[tb[0]] + m.vertices()[tb[1]] + m.vertices()[tb[2]]) / 3.0;
      const Vec2 ya = (y[ta[0]] + y[ta[1]] + y[ta[2]]) / 3.0;
      const Vec2 yb = (y[tb[0]] + y[tb[1]] + y[tb[2]]) / 3.0;
      sum += m.element_areas()[a] * m.element_areas()[b] * std::pow((xa - xb).norm(), q) /
             std::pow((ya - yb).norm(), 2.0 + s * q) * f.state()[a].det * f.state()[b].det;
    }
  }
  return sum;
}

double dense_surface(const Mesh& m, const std::vector<Vec2>& y, double q, double s) {
  const auto& e = m.boundary_edges();
  double sum = 0.0;
  for (std::size_t a = 0; a < e.size(); ++a) {
    for (std::size_t b = 0; b < e.size(); ++b) {
      if (a == b) continue;
      const Vec2 xa = 0.5 * (m.vertices()[e[a][0]] + m.vertices()[e[a][1]]);
      const Vec2 xb = 0.5 * (m.vertices()[e[b][0]] + m.vertices()[e[b][1]]);
      const Vec2 ya = 0.5 * (y[e[a][0]] + y[e[a][1]]);
      const Vec2 yb = 0.5 * (y[e[b][0]] + y[e[b][1]]);
      const double la = (m.vertices()[e[a][0]] - m.vertices()[e[a][1]]).norm();
      const double lb = (m.vertices()[e[b][0]] - m.vertices()[e[b][1]]).norm();
      sum += la * lb * std::pow((xa - xb).norm(), q) / std::pow((ya - yb).norm(), 1.0 + s * q);
    }
  }
  return sum;
}

std::vector<int> all_ids(const Mesh& m) {
  std::vector<int> ids(m.num_triangles());
  for (std::size_t t = 0; t < ids.size(); ++t) ids[t] = static_cast<int>(t);
  return ids;
}

double bulk_value(const Mesh& m, const std::vector<Vec2>& y, double q, double s, const Region& r,
                  const QuadratureSpec& quad = kCentroid) {
  return bulk_repulsion(m, DeformationField(m, y), q, s, r, quad, false).value;
}

double surface_value(const Mesh& m, const std::vector<Vec2>& y, double q, double s,
                     const QuadratureSpec& quad = kCentroid) {
  return surface_repulsion(m, DeformationField(m, y), q, s, quad, false).value;
}

}  // namespace

TEST(BulkRepulsion, MatchesDenseOracle) {
  const Mesh m = build_structured_square(5);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 3; ++k) {
    const auto y = jittered_identity(m, 0.3, rng);
    const double expected = dense_bulk(m, y, 2.5, 0.4, all_ids(m));
    EXPECT_NEAR(bulk_value(m, y, 2.5, 0.4, full_region(m)), expected, 1e-12 * expected);
  }
}

TEST(SurfaceRepulsion, MatchesDenseOracle) {
  const Mesh m = build_half_annulus(3);
  std::mt19937_64 rng(22);
  const auto y = jittered_identity(m, 0.3, rng);
  const double expected = dense_surface(m, y, 3.0, 0.7);
  EXPECT_NEAR(surface_value(m, y, 3.0, 0.7), expected, 1e-12 * expected);
}

TEST(BulkRepulsion, IdentityClosedFormSkipSelf) {
  // Kernel is 1 for q = 2, s = 0; skipping the N diagonal pairs leaves (N - 1) / N.
  for (int n : {2, 4, 16}) {
    const Mesh m = build_structured_square(n);
    const double N = 2.0 * n * n;
    const RepulsionResult r = bulk_repulsion(m, DeformationField::identity(m), 2, 0, full_region(m), kCentroid);
    EXPECT_NEAR(r.value, (N - 1) / N, 1e-13);
    EXPECT_EQ(r.pairs, static_cast<std::size_t>(N * (N - 1)));
  }
  const Mesh m = build_structured_square(6);
  QuadratureSpec three{QuadratureScheme::three_point, DiagonalPolicy::skip_self, 2};
  EXPECT_NEAR(bulk_value(m, m.vertices(), 2, 0, full_region(m), three), 1.0 - 1.0 / 72.0, 1e-13);
}

TEST(BulkRepulsion, SubdividedDiagonalOnKernelOne) {
  // With the diagonal refined, only coincident sub-cells are dropped: each
  // triangle loses 4^depth sub-cell pairs of weight (area / 4^depth)^2.
  const Mesh m = build_structured_square(4);
  const QuadratureSpec sub{QuadratureScheme::centroid, DiagonalPolicy::subdivide_adjacent, 2};
  const double N = 32.0;
  EXPECT_NEAR(bulk_value(m, m.vertices(), 2, 0, full_region(m), sub), 1.0 - 1.0 / (16.0 * N), 1e-13);
}

TEST(SurfaceRepulsion, IdentityClosedFormSkipSelf) {
  for (int n : {1, 4, 16}) {
    const Mesh m = build_structured_square(n);
    EXPECT_NEAR(surface_value(m, m.vertices(), 1, 0), 16.0 - 4.0 / n, 1e-12);
  }
}

TEST(BulkRepulsion, ConvergesToReciprocalDistanceIntegral) {
  // q = 2, s = 1/2: kernel 1/|x - x'|, whose integral over the unit square
  // squared is 4 ln(1 + sqrt 2) - 4 (sqrt 2 - 1) / 3.
  const double exact = 4.0 * std::log(1.0 + std::numbers::sqrt2) - 4.0 * (std::numbers::sqrt2 - 1.0) / 3.0;
  const QuadratureSpec sub{QuadratureScheme::three_point, DiagonalPolicy::subdivide_adjacent, 2};
  double previous = kInfinity;
  for (int n : {4, 8, 16}) {
    const Mesh m = build_structured_square(n);
    const double err = std::abs(bulk_value(m, m.vertices(), 2, 0.5, full_region(m), sub) - exact) / exact;
    EXPECT_LT(err, previous) << n;
    previous = err;
  }
  EXPECT_LT(previous, 0.02);
}

TEST(Repulsion, GradientsMatchCentralDifferences) {
  const Mesh m = build_structured_square(4);
  const Region layer = delta_layer(m, 0.3);
  ASSERT_LT(layer.size(), m.num_triangles());
  const QuadratureSpec specs[] = {
      {QuadratureScheme::centroid, DiagonalPolicy::skip_self, 2},
      {QuadratureScheme::three_point, DiagonalPolicy::subdivide_adjacent, 1},
  };
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = jittered_identity(m, 0.3, rng);
    const DeformationField f(m, y);
    const QuadratureSpec& quad = specs[trial % 2];
    const double q = 2.0 + 0.25 * (trial % 4), s = 0.1 * (trial % 7);

    const auto bulk = bulk_repulsion(m, f, q, s, full_region(m), quad);
    const auto fd_bulk = central_difference(
        [&](const std::vector<Vec2>& z) { return bulk_value(m, z, q, s, full_region(m), quad); }, y, 1e-6);
    EXPECT_LT(relative_error(bulk.gradient, fd_bulk), 1e-5) << "bulk trial " << trial;

    const auto lay = bulk_repulsion(m, f, q, s, layer, quad);
    const auto fd_lay = central_difference(
        [&](const std::vector<Vec2>& z) { return bulk_value(m, z, q, s, layer, quad); }, y, 1e-6);
    EXPECT_LT(relative_error(lay.gradient, fd_lay), 1e-5) << "layer trial " << trial;

    const auto surf = surface_repulsion(m, f, q, s, quad);
    const auto fd_surf =
        central_difference([&](const std::vector<Vec2>& z) { return surface_value(m, z, q, s, quad); }, y, 1e-6);
    EXPECT_LT(relative_error(surf.gradient, fd_surf), 1e-5) << "surface trial " << trial;
  }
}

TEST(Repulsion, RigidMotionInvariance) {
  const Mesh m = build_structured_square(6);
  std::mt19937_64 rng(4);
  const auto y = jittered_identity(m, 0.3, rng);
  const Region layer = delta_layer(m, 0.2);
  const double b0 = bulk_value(m, y, 2, 0.5, full_region(m));
  const double l0 = bulk_value(m, y, 2, 0.5, layer);
  const double s0 = surface_value(m, y, 4, 0.5);
  for (double angle : {0.4, 2.2}) {
    std::vector<Vec2> z;
    for (const auto& p : y) z.push_back(rotation(angle) * p + Vec2(-7.0, 3.0));
    EXPECT_NEAR(bulk_value(m, z, 2, 0.5, full_region(m)), b0, 1e-10 * b0);
    EXPECT_NEAR(bulk_value(m, z, 2, 0.5, layer), l0, 1e-10 * l0);
    EXPECT_NEAR(surface_value(m, z, 4, 0.5), s0, 1e-10 * s0);
  }
}

TEST(SurfaceRepulsion, Homogeneity) {
  const Mesh m = build_structured_square(8);
  const double q = 4, s = 0.5;
  const double base = surface_value(m, m.vertices(), q, s);
  for (double lambda : {0.5, 2.0, 3.0}) {
    std::vector<Vec2> y;
    for (const auto& x : m.vertices()) y.push_back(lambda * x);
    EXPECT_NEAR(surface_value(m, y, q, s), std::pow(lambda, -(1.0 + s * q)) * base,
                1e-13 * std::pow(lambda, -(1.0 + s * q)) * base);
  }
}

TEST(BulkRepulsion, RegionMonotone) {
  const Mesh m = build_structured_square(8);
  std::mt19937_64 rng(13);
  const auto y = jittered_identity(m, 0.2, rng);
  double previous = 0.0;
  for (double delta : {0.01, 0.1, 0.2, 0.3, 10.0}) {
    const double v = bulk_value(m, y, 2, 0.3, delta_layer(m, delta));
    EXPECT_GE(v, previous);
    previous = v;
  }
  EXPECT_EQ(previous, bulk_value(m, y, 2, 0.3, full_region(m)));
}

TEST(BulkRepulsion, LayerPairCount) {
  for (int n : {8, 16}) {
    const Mesh m = build_structured_square(n);
    const Region layer = delta_layer(m, 2.0 / n);
    const std::size_t L = 16u * n - 32u;
    EXPECT_EQ(layer.size(), L);
    EXPECT_EQ(bulk_repulsion(m, DeformationField::identity(m), 2, 0, layer, kCentroid, false).pairs, L * (L - 1));
  }
}

TEST(Repulsion, BitIdenticalAcrossWorkers) {
  const Mesh m = build_structured_square(10);
  std::mt19937_64 rng(77);
  const DeformationField f(m, jittered_identity(m, 0.2, rng));
  const QuadratureSpec sub{QuadratureScheme::three_point, DiagonalPolicy::subdivide_adjacent, 1};
  const auto b1 = bulk_repulsion(m, f, 2, 0.5, full_region(m), sub, true, 1);
  const auto s1 = surface_repulsion(m, f, 4, 0.5, sub, true, 1);
  for (int w : {2, 5}) {
    const auto bw = bulk_repulsion(m, f, 2, 0.5, full_region(m), sub, true, w);
    const auto sw = surface_repulsion(m, f, 4, 0.5, sub, true, w);
    EXPECT_EQ(b1.value, bw.value);
    EXPECT_EQ(s1.value, sw.value);
    EXPECT_EQ(b1.gradient, bw.gradient);
    EXPECT_EQ(s1.gradient, sw.gradient);
  }
}

TEST(Repulsion, Sentinels) {
  // Folded strip: inadmissible.
  const Scenario fold = make_scenario("fold", 4);
  const DeformationField ff(*fold.mesh, fold.initial);
  const auto r = bulk_repulsion(*fold.mesh, ff, 2, 0, full_region(*fold.mesh), kCentroid);
  EXPECT_EQ(r.status, EvalStatus::inadmissible);
  EXPECT_TRUE(std::isinf(r.value));
  EXPECT_GE(r.witness[0], 0);

  // Angle doubling glues the two straight boundary pieces: the surface term
  // sees coincident edge midpoints.
  const Scenario ad = make_scenario("angle-doubling", 4);
  const DeformationField fa(*ad.mesh, ad.initial);
  ASSERT_TRUE(fa.admissible());
  const auto s = surface_repulsion(*ad.mesh, fa, 2, 0.5, kCentroid);
  EXPECT_EQ(s.status, EvalStatus::coincident_images);
  EXPECT_TRUE(std::isinf(s.value));
  const auto& e = ad.mesh->boundary_edges();
  const Vec2 m0 = 0.5 * (fa.positions()[e[s.witness[0]][0]] + fa.positions()[e[s.witness[0]][1]]);
  const Vec2 m1 = 0.5 * (fa.positions()[e[s.witness[1]][0]] + fa.positions()[e[s.witness[1]][1]]);
  EXPECT_LT((m0 - m1).norm(), 1e-12);
}

TEST(Repulsion, DispatchAndRegionRules) {
  const Mesh m = build_structured_square(4);
  ModelParams p;
  p.variant = Variant::boundary_layer;
  EXPECT_THROW(active_region(p, m), std::invalid_argument);
  p.delta = 0.25;
  EXPECT_EQ(active_region(p, m).element_ids, delta_layer(m, 0.25).element_ids);
  p.variant = Variant::surface;
  p.q = 1;
  EXPECT_NEAR(repulsion_dispatch(p, m, DeformationField::identity(m), kCentroid).value, 15.0, 1e-12);
  const QuadratureSpec bad{QuadratureScheme::centroid, DiagonalPolicy::subdivide_adjacent, 0};
  EXPECT_THROW(surface_repulsion(m, DeformationField::identity(m), 1, 0, bad), std::invalid_argument);
}

TEST(CostProfile, LogLogSlopeOfExactPowers) {
  const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> t;
  for (double v : h) t.push_back(3.0 * std::pow(v, -4.0));
  EXPECT_NEAR(fit_loglog_slope(h, t), -4.0, 1e-12);
}

TEST(CostProfile, PairCountSlopesAreExact) {
  ModelParams p;
  const CostProfile bulk = cost_profile({4, 8}, Variant::bulk, p, kCentroid, 2.0, 1, 1);
  ASSERT_EQ(bulk.rows.size(), 2u);
  EXPECT_EQ(bulk.rows[0].pairs, 32u * 31u);
  EXPECT_EQ(bulk.rows[1].pairs, 128u * 127u);
  EXPECT_GT(bulk.rows[0].median_seconds, 0.0);
}
