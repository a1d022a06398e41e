#include "selfrep/optimizer.hpp"
#include "selfrep/scenario.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace selfrep;
using selfrep::testing::central_difference;
using selfrep::testing::relative_error;

namespace {

// p = 4, r = 8 makes the identity stress free: P = 4|F|^2 F - 8 cof F = 0 at F = I.
ModelParams stress_free(double eps) {
  ModelParams m;
  m.p = 4;
  m.r = 8;
  m.epsilon = eps;
  return m;
}

void expect_feasible_descent(const OptimizerTrace& trace) {
  ASSERT_FALSE(trace.records.empty());
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    EXPECT_GT(trace.records[k].min_det, 0.0) << "record " << k;
    if (k > 0) EXPECT_LE(trace.records[k].total, trace.records[k - 1].total) << "record " << k;
  }
}

}  // namespace

TEST(BoxPenalty, ValuesAndGradient) {
  const Box box{{0, 0}, {1, 1}};
  const std::vector<Vec2> inside{{0.5, 0.5}, {0, 1}, {1, 0.2}};
  EXPECT_EQ(box_penalty(inside, box, 1e4).value, 0.0);
  const std::vector<Vec2> one_out{{0.5, 0.5}, {1.1, 0.5}};
  EXPECT_NEAR(box_penalty(one_out, box, 1e4).value, 1e4 * 0.01, 1e-9);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> y(12);
    for (auto& p : y) p = Vec2(u(rng), u(rng));
    const PenaltyValue pen = box_penalty(y, box, 50.0);
    const auto fd = central_difference([&](const std::vector<Vec2>& z) { return box_penalty(z, box, 50.0).value; },
                                       y, 1e-6);
    EXPECT_LT(relative_error(pen.gradient, fd), 1e-6) << trial;
  }
}

TEST(Minimize, StressFreeIdentityStopsImmediately) {
  const Mesh m = build_structured_square(6);
  const EnergyContext ctx(m, stress_free(0.0), QuadratureSpec{});
  const MinimizeResult res = minimize(ctx, DeformationField::identity(m), OptimizerSettings{});
  EXPECT_EQ(res.trace.reason, Termination::converged);
  EXPECT_LE(res.trace.records.size(), 2u);
  EXPECT_NEAR(res.energy.total, 5.0, 1e-12);
}

TEST(Minimize, IdentityUnderDefaultExponentsIsNotCritical) {
  // p = 4, r = 3: P(I) = 5 I, so the free boundary is loaded.
  const Mesh m = build_structured_square(4);
  ModelParams params;
  params.epsilon = 0.0;
  const EnergyBreakdown e = evaluate_energy(EnergyContext(m, params, QuadratureSpec{}), DeformationField::identity(m));
  double gmax = 0.0;
  for (const auto& g : e.gradient) gmax = std::max(gmax, g.cwiseAbs().maxCoeff());
  EXPECT_GT(gmax, 1e-3);
}

TEST(Minimize, SmoothPerturbationDescendsToIdentityEnergy) {
  const Mesh m = build_structured_square(8);
  std::vector<Vec2> y;
  for (const auto& x : m.vertices())
    y.push_back(x + 0.01 * Vec2(std::sin(std::numbers::pi * x.x()) * std::sin(2 * std::numbers::pi * x.y()),
                                std::cos(std::numbers::pi * x.y()) * x.x()));
  const EnergyContext ctx(m, stress_free(0.0), QuadratureSpec{});
  OptimizerSettings settings;
  settings.grad_tol = 1e-8;
  settings.max_iters = 2000;
  const DeformationField y0(m, y);
  const double initial = evaluate_energy(ctx, y0).total;
  const MinimizeResult res = minimize(ctx, y0, settings);
  expect_feasible_descent(res.trace);
  EXPECT_EQ(res.trace.reason, Termination::converged);
  EXPECT_LE(res.energy.total, initial);
  EXPECT_LE(res.energy.total, 5.0 + 1e-6);
}

TEST(Minimize, GradientDescentAlsoDescends) {
  const Mesh m = build_structured_square(4);
  std::mt19937_64 rng(10);
  const DeformationField y0(m, selfrep::testing::jittered_identity(m, 0.2, rng));
  const EnergyContext ctx(m, stress_free(1e-3), QuadratureSpec{});
  OptimizerSettings settings;
  settings.method = Method::gradient_descent;
  settings.max_iters = 60;
  const MinimizeResult res = minimize(ctx, y0, settings);
  expect_feasible_descent(res.trace);
  EXPECT_LT(res.trace.records.back().total, res.trace.records.front().total);
}

TEST(Minimize, InfeasibleStartThrows) {
  const Scenario fold = make_scenario("fold", 4);
  const EnergyContext ctx(*fold.mesh, stress_free(0.0), QuadratureSpec{});
  EXPECT_THROW(minimize(ctx, DeformationField(*fold.mesh, fold.initial), OptimizerSettings{}), InfeasibleStart);
}

TEST(Minimize, BoxSqueezeStaysFeasible) {
  const Mesh m = build_structured_square(6);
  ModelParams params = stress_free(1e-2);
  params.variant = Variant::surface;
  params.q = 4;
  params.s = 0.5;
  params.box = Box{{-0.5, 0.1}, {1.5, 0.9}};
  const EnergyContext ctx(m, params, QuadratureSpec{});
  OptimizerSettings settings;
  settings.max_iters = 80;
  const MinimizeResult res = minimize(ctx, DeformationField::identity(m), settings);
  expect_feasible_descent(res.trace);
  EXPECT_GT(res.trace.records.front().box_term, 0.0);
  EXPECT_LT(res.box_term, res.trace.records.front().box_term);
}

TEST(Minimize, TracesBitIdenticalAcrossWorkers) {
  const Mesh m = build_structured_square(5);
  std::mt19937_64 rng(12);
  const DeformationField y0(m, selfrep::testing::jittered_identity(m, 0.2, rng));
  OptimizerSettings settings;
  settings.max_iters = 15;
  const MinimizeResult a = minimize(EnergyContext(m, stress_free(0.1), QuadratureSpec{}, 1), y0, settings);
  const MinimizeResult b = minimize(EnergyContext(m, stress_free(0.1), QuadratureSpec{}, 4), y0, settings);
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t k = 0; k < a.trace.records.size(); ++k) {
    EXPECT_EQ(a.trace.records[k].total, b.trace.records[k].total);
    EXPECT_EQ(a.trace.records[k].step, b.trace.records[k].step);
  }
  EXPECT_EQ(a.field.positions(), b.field.positions());
}

TEST(ShrinkMap, HalvesTheSquare) {
  const Mesh m = build_structured_square(8);
  const ShrinkResult s = shrink_map(m, 2, Vec2(0.5, 0.5), DeformationField::identity(m));
  Vec2 lo = s.mapped.front(), hi = lo;
  double sup = 0.0;
  for (std::size_t v = 0; v < s.mapped.size(); ++v) {
    lo = lo.cwiseMin(s.mapped[v]);
    hi = hi.cwiseMax(s.mapped[v]);
    sup = std::max(sup, (s.mapped[v] - m.vertices()[v]).norm());
    EXPECT_NEAR((s.composed.positions()[v] - s.mapped[v]).norm(), 0.0, 1e-15);
  }
  EXPECT_NEAR(lo.x(), 0.25, 1e-15);
  EXPECT_NEAR(hi.y(), 0.75, 1e-15);
  EXPECT_NEAR(sup, 0.5 * std::numbers::sqrt2 / 2.0, 1e-15);
}

TEST(ShrinkMap, SupNormDecaysLikeOneOverJ) {
  const Mesh m = build_structured_square(4);
  for (int j : {3, 8, 32}) {
    const ShrinkResult s = shrink_map(m, j, Vec2(0.5, 0.5), DeformationField::identity(m));
    double sup = 0.0;
    for (std::size_t v = 0; v < s.mapped.size(); ++v) sup = std::max(sup, (s.mapped[v] - m.vertices()[v]).norm());
    EXPECT_NEAR(sup, std::numbers::sqrt2 / 2.0 / j, 1e-15);
  }
}

TEST(ShrinkMap, ComposedIdentityHasScaledEnergy) {
  // y o Psi_j on the identity is lambda x + c with lambda = (j-1)/j.
  const Mesh m = build_structured_square(8);
  const ModelParams params;  // p = 4, r = 3
  for (int j : {2, 5}) {
    const ShrinkResult s = shrink_map(m, j, Vec2(0.5, 0.5), DeformationField::identity(m));
    const double lambda = (j - 1.0) / j;
    const double expected = 4.0 * std::pow(lambda, 4) + std::pow(lambda, -6);
    EXPECT_NEAR(elastic_energy(m, s.composed, params.p, params.r, false).value, expected, 1e-12);
  }
}

TEST(ShrinkMap, RejectsNonStarShapedDomain) {
  const Mesh m = build_slotted_square(16);
  try {
    shrink_map(m, 2, Vec2(0.9, 0.5), DeformationField::identity(m));
    FAIL() << "expected NotStarShaped";
  } catch (const NotStarShaped& e) {
    EXPECT_TRUE(m.is_boundary_vertex(e.vertex()));
  }
  EXPECT_THROW(shrink_map(m, 2, Vec2(3.0, 0.5), DeformationField::identity(m)), PointOutsideDomain);
  EXPECT_THROW(shrink_map(m, 1, Vec2(0.9, 0.2), DeformationField::identity(m)), std::invalid_argument);
}

TEST(GammaSweep, ScheduleHelpers) {
  const auto s = geometric_schedule(0.1, 0.5, 6);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_DOUBLE_EQ(s[5], 0.1 / 32.0);
  const Mesh m = build_structured_square(2);
  const std::vector<double> rising{0.1, 0.2};
  EXPECT_THROW(gamma_sweep(m, DeformationField::identity(m), rising, stress_free(1), QuadratureSpec{},
                           OptimizerSettings{}, 64),
               std::invalid_argument);
}

TEST(GammaSweep, UnloadedIdentityStaysPut) {
  const Mesh m = build_structured_square(6);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  const SweepResult res = gamma_sweep(m, DeformationField::identity(m), zeros, stress_free(0), QuadratureSpec{},
                                      OptimizerSettings{}, 256);
  ASSERT_EQ(res.records.size(), 3u);
  const CncReport id = cnc_defect(m, DeformationField::identity(m), 256);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.field.positions(), m.vertices());
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.cnc.defect, id.defect);
    EXPECT_EQ(r.cnc.image_area, id.image_area);
    EXPECT_EQ(r.eps_times_nonlocal, 0.0);
  }
}

TEST(GammaSweep, ConstantScheduleIsIdempotent) {
  const Mesh m = build_structured_square(4);
  OptimizerSettings settings;
  settings.grad_tol = 1e-7;
  settings.max_iters = 3000;
  const std::vector<double> twice{0.05, 0.05};
  const SweepResult res = gamma_sweep(m, DeformationField::identity(m), twice, stress_free(0), QuadratureSpec{},
                                      settings, 128);
  ASSERT_EQ(res.records.size(), 2u);
  ASSERT_EQ(res.records[0].reason, Termination::converged);
  EXPECT_EQ(res.records[1].iterations, 0);
  EXPECT_EQ(res.records[1].field.positions(), res.records[0].field.positions());
  EXPECT_EQ(res.records[1].energy.total, res.records[0].energy.total);
}
