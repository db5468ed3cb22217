#include <doctest.h>

#include "cql/attraction.hpp"
#include "cql/dynamics.hpp"
#include "cql/integrate.hpp"

#include <cmath>

using namespace cql;
using doctest::Approx;

TEST_CASE("harmonic oscillator of the zeroth order field") {
  MaterialParams m = preset(Figure::FIG2);
  const DerivedParams p = derive_params(m);
  const double K = p.K, om = 0.07 * std::sqrt(0.74 * 0.8116);
  const Field f = [&](double, const Vec3& u) { return Vec3(linear_part(u(2), p) * u); };
  const Trajectory tr = integrate(f, Vec3(-1.0, 0.0, -K), 0.0, 200.0);
  double err = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) err = std::max(err, std::abs(tr.states[i](0) + std::cos(om * tr.times[i])));
  CHECK(err < 1e-8);
  for (double t : uniform_grid(0.0, 200.0, 0.37)) CHECK(tr.dense(t)(0) == Approx(-std::cos(om * t)).epsilon(1e-7));
  CHECK(tr.stages.front() == Stage::Free);
}

TEST_CASE("constant field") {
  const Vec3 u0(0.1, 0.2, 0.3);
  const Trajectory tr = integrate([](double, const Vec3&) { return Vec3::Zero().eval(); }, u0, 0.0, 10.0);
  for (const Vec3& u : tr.states) CHECK(u == u0);
}

TEST_CASE("step control on a stiff-ish linear decay") {
  const Field f = [](double, const Vec3& u) { return Vec3(-50.0 * u(0), -u(1), 0.0); };
  IntegratorOptions o;
  o.rtol = 1e-9;
  o.atol = 1e-12;
  const Trajectory tr = integrate(f, Vec3(1, 1, 1), 0.0, 2.0, o);
  CHECK(tr.back()(0) == Approx(std::exp(-100.0)).epsilon(1e-6));
  CHECK(tr.back()(1) == Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(tr.times.back() == 2.0);
}

TEST_CASE("Psi drift of the scaled field") {
  const DerivedParams p = derive_params(preset(Figure::FIG2));
  const Vec3 u0 = (p.s_minus + Vec3(0.01, 0.0, 0.0)).normalized();
  const Trajectory tr = integrate([&](double, const Vec3& u) { return scaled_rhs<double>(u, p.beta_e_t, p); }, u0,
                                  0.0, 100.0);
  CHECK(tr.psi_drift < 1e-9);
  IntegratorOptions o;
  o.renormalize = true;
  const Trajectory tn = integrate([&](double, const Vec3& u) { return scaled_rhs<double>(u, p.beta_e_t, p); }, u0,
                                  0.0, 100.0, o);
  CHECK(tn.psi_drift < 1e-14);
}

TEST_CASE("stop predicates") {
  const Field rot = [](double, const Vec3& u) { return Vec3(-u(1), u(0), 0.0); };
  SUBCASE("located by bisection") {
    const Trajectory tr = integrate_until(rot, Vec3(1, 0, 0), [](double, const Vec3& u) { return u(0) < 0.0; }, 10.0);
    CHECK(tr.limit_reached);
    CHECK(tr.times.back() == Approx(M_PI / 2).epsilon(1e-9));
  }
  SUBCASE("never true") {
    const Trajectory tr = integrate_until(rot, Vec3(1, 0, 0), [](double, const Vec3&) { return false; }, 10.0);
    CHECK_FALSE(tr.limit_reached);
    CHECK(tr.times.back() == 10.0);
  }
  SUBCASE("true at the start") {
    const Trajectory tr = integrate_until(rot, Vec3(1, 0, 0), [](double, const Vec3&) { return true; }, 10.0);
    CHECK(tr.size() == 1);
  }
  SUBCASE("field threshold reaches the attraction limit") {
    const DerivedParams p = derive_params(preset(Figure::FIG4));
    const Vec3 U0 = basin_boundary_points(8, 0.0, p)[3];
    const Field f = [&](double, const Vec3& U) { return attraction_rhs(U, p); };
    const Trajectory tr = integrate_until(f, U0, [&](double, const Vec3& U) { return attraction_rhs(U, p).norm() < 1e-9; },
                                          default_attraction_horizon(p));
    CHECK(tr.limit_reached);
    CHECK((tr.back() - predicted_limit(0.0, p)).norm() < 1e-6);
  }
}

TEST_CASE("group property") {
  const DerivedParams p = derive_params(preset(Figure::FIG2));
  const Field f = [&](double, const Vec3& u) { return scaled_rhs<double>(u, 1.0, p); };
  const Vec3 u0 = p.s_minus;
  const Trajectory one = integrate(f, u0, -5.0, 40.0);
  const Trajectory a = integrate(f, u0, -5.0, 0.0);
  const Trajectory b = integrate(f, a.back(), 0.0, 40.0);
  CHECK((one.back() - b.back()).norm() < 1e-9);
  Trajectory joined = a;
  joined.append(b);
  CHECK(joined.size() == a.size() + b.size() - 1);
  CHECK(joined.dense(20.0).isApprox(b.dense(20.0)));
}

TEST_CASE("argument checks") {
  const Field f = [](double, const Vec3& u) { return u; };
  CHECK_THROWS(integrate(f, Vec3::Zero(), 1.0, 1.0));
  CHECK_THROWS(uniform_grid(0.0, 1.0, 0.0));
  const auto g = uniform_grid(0.0, 1.0, 0.3);
  CHECK(g.size() == 5);
  CHECK(g.back() == 1.0);
  CHECK(stage_name(Stage::Transfer) == "TRANSFER");
}
