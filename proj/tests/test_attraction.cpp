#include <doctest.h>

#include "cql/attraction.hpp"
#include "cql/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace cql;
using doctest::Approx;

namespace {

DerivedParams fig4() { return derive_params(preset(Figure::FIG4)); }

}  // namespace

TEST_CASE("basin specification") {
  const DerivedParams p = fig4();
  const BasinSpec b = basin_spec(p);
  CHECK(p.gamma == Approx(0.98368).epsilon(1e-5));
  const double U3 = p.D21 * p.gamma / (4 * p.D31 * p.Omega);
  CHECK(lyapunov_W(0.0, U3, p) == Approx(b.W_star).epsilon(1e-14));
  CHECK(b.W_star == Approx(std::pow(p.D21 * p.gamma, 2) / (32 * p.D31 * p.Omega * p.Omega)).epsilon(1e-14));
  CHECK(b.delta_a_max == Approx(0.0605).epsilon(2e-3));
  CHECK(b.u1_cap == Approx(p.gamma / 4));
  // The disk of radius r_sm lies inside the W_star level.
  for (int k = 0; k < 2000; ++k) {
    const double th = 2 * std::numbers::pi * k / 2000.0;
    CHECK(lyapunov_W(b.r_sm * std::cos(th), b.r_sm * std::sin(th), p) <= b.W_star * (1 + 1e-12));
  }
}

TEST_CASE("translated field") {
  const DerivedParams p = fig4();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 200; ++k) {
    const Vec3 U(u(rng), u(rng), u(rng));
    CHECK((attraction_rhs(U, p) - reduced_rhs<double>(Vec3(U + p.s_plus), 0.0, p)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(psi_tilde(U, p) == Approx((U + p.s_plus).squaredNorm()));
    // Psi is conserved and W does not increase.
    const Vec3 f = attraction_rhs(U, p);
    CHECK(std::abs((U + p.s_plus).dot(f)) < 1e-14);
    CHECK(p.D21 * U(1) * f(1) + p.D31 * U(2) * f(2) <= 1e-14);
  }
  CHECK(attraction_rhs(Vec3::Zero(), p).norm() < 1e-15);
}

TEST_CASE("energy surface and basin membership") {
  const DerivedParams p = fig4();
  const BasinSpec b = basin_spec(p);
  const double U1 = surface_U1(0.01, -0.02, 0.01, p);
  CHECK(psi_tilde(Vec3(U1, 0.01, -0.02), p) == Approx(1.01).epsilon(1e-14));
  CHECK(basin_contains(Vec3(U1, 0.01, -0.02), 0.01, p));
  CHECK(basin_contains(Vec3::Zero(), 0.0, p));
  CHECK_FALSE(basin_contains(Vec3(U1, 0.01, -0.02), 0.02, p));
  const double U3 = 1.01 * std::sqrt(2 * b.W_star / p.D31);
  CHECK_FALSE(basin_contains(Vec3(surface_U1(0.0, U3, 0.0, p), 0.0, U3), 0.0, p));
  const double V1 = surface_U1(0.0, 0.0, 0.1, p);
  CHECK_THROWS_AS(basin_contains(Vec3(V1, 0, 0), 0.1, p), ParameterError);
  CHECK(basin_contains(Vec3(V1, 0, 0), 0.1, p, false));
  CHECK_THROWS_AS(surface_U1(2.0, 0.0, 0.0, p), ParameterError);
}

TEST_CASE("predicted limit") {
  const DerivedParams p = fig4();
  const Vec3 l = predicted_limit(0.1, p);
  CHECK(l(0) == Approx(0.049581).epsilon(1e-5));
  CHECK(l(0) <= 0.1 / (2 * p.gamma));
  CHECK(0.1 / (2 * p.gamma) == Approx(0.050829).epsilon(1e-5));
  CHECK(l(1) == 0.0);
  CHECK(predicted_limit(0.0, p).norm() == 0.0);
  CHECK(predicted_limit(-0.01, p)(0) < 0.0);
  CHECK(psi_tilde(predicted_limit(0.03, p), p) == Approx(1.03).epsilon(1e-14));
  CHECK_THROWS_AS(predicted_limit(-2.0, p), ParameterError);
}

TEST_CASE("relaxation from the basin boundary") {
  const DerivedParams p = fig4();
  for (double da : {0.0, 0.03, 0.1}) {
    const Vec3 target = predicted_limit(da, p);
    const auto pts = basin_boundary_points(8, da, p);
    REQUIRE(pts.size() == 8);
    for (const Vec3& U0 : pts) {
      CHECK(lyapunov_W(U0(1), U0(2), p) == Approx(basin_spec(p).W_star).epsilon(1e-12));
      const AttractionResult r = run_attraction(U0, p);
      CHECK(r.converged);
      CHECK((r.U_infinity - target).norm() < 1e-6);
      CHECK(r.max_W_increase <= kLyapunovNoise);
      CHECK(r.trajectory.psi_drift < 1e-9);
      CHECK(r.W_series.size() == r.trajectory.size());
    }
  }
  const AttractionResult z = run_attraction(Vec3::Zero(), p);
  CHECK(z.converged);
  CHECK(z.U_infinity.norm() == 0.0);
  CHECK(z.trajectory.size() == 1);
  CHECK_THROWS_AS(run_attraction(basin_boundary_points(1, 0.1, p)[0], p, 0.0, {}, true), ParameterError);
  CHECK_THROWS_AS(run_attraction(Vec3(0.0, 0.6, 0.0), p), ParameterError);
}

TEST_CASE("theorem parameter recipe") {
  const TheoremParams t = select_theorem_params(0.0411, 0.8527, 0.006006);
  const double D21 = 6.51 * 0.006006, D31 = 0.8116;
  CHECK(t.Omega * t.Omega == Approx(52.0 / 75.0 * D21 / D31).epsilon(1e-14));
  CHECK(t.Omega == Approx(0.182772).epsilon(1e-5));
  CHECK(t.gamma == Approx(std::sqrt(1 - t.Omega * t.Omega)));
  CHECK(t.K_bar == Approx(t.gamma / 4 * std::sqrt(D21 / D31)));
  CHECK(t.K_bar == Approx(0.05399).epsilon(1e-3));
  CHECK(t.h2 == Approx(-D21 * t.Omega));
  CHECK(t.f == Approx(1 / (2 * t.gamma)));
  CHECK(t.r_minus == Approx(t.Theta * t.K_bar / (128 * t.M_e * (1 + t.Theta))));
  CHECK(t.r_minus > 0.0);
  CHECK_FALSE(t.compatible);
  CHECK(t.compatibility_margin < 0.0);
  CHECK_THROWS_AS(select_theorem_params(0.0411, 0.8527, 0.006006, 2.0, kCaptionBetaE, true), PlanningError);
  // The margin is negative for every lambda: 50 gamma^2 / 16 > 3 gamma^2.
  for (double lam : {0.001, 0.003, 0.01}) CHECK_FALSE(select_theorem_params(0.0411, 0.8527, lam).compatible);
}
