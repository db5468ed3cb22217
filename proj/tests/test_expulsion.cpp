#include <doctest.h>

#include "cql/dynamics.hpp"
#include "cql/expulsion.hpp"
#include "cql/integrate.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace cql;
using doctest::Approx;

namespace {

DerivedParams fig2() { return derive_params(preset(Figure::FIG2)); }

// Plain Taylor series after scaling by 2^s, accumulated in long double.
Mat3 series_expm(const Mat3& M) {
  using LMat = Eigen::Matrix<long double, 3, 3>;
  const int s = 10;
  const LMat A = M.cast<long double>() / std::ldexp(1.0L, s);
  LMat term = LMat::Identity(), sum = LMat::Identity();
  for (int k = 1; k < 25; ++k) {
    term = term * A / static_cast<long double>(k);
    sum += term;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum.cast<double>();
}

}  // namespace

TEST_CASE("translated linear system") {
  const DerivedParams p = fig2();
  REQUIRE(p.beta_e == 0.03);
  const ExpulsionSystem s = expulsion_system(p, p.beta_e);
  CHECK(s.a_bar == Approx(-0.74 * 0.0676 - 0.03 * p.gamma).epsilon(1e-14));
  CHECK(s.a_bar == Approx(-0.07996).epsilon(1e-4));
  CHECK(s.b_bar == Approx(0.73628).epsilon(1e-4));
  CHECK(std::abs(s.a_bar * p.gamma + s.b_bar * p.Omega + 0.03) < 1e-14);
  CHECK(s.f(2) == Approx(-0.03 / p.lambda));
  CHECK(s.L(2, 0) == Approx(2 * 0.03 * p.gamma));
  CHECK_THROWS_AS(expulsion_system(p, 0.0), ParameterError);

  const Eigen::Vector3cd ev = s.L.eigenvalues();
  std::vector<double> im;
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(ev(k).real()) < 1e-12);
    im.push_back(ev(k).imag());
  }
  std::sort(im.begin(), im.end());
  CHECK(im[0] == Approx(-std::sqrt(2.0) * 0.03).epsilon(1e-12));
  CHECK(std::abs(im[1]) < 1e-12);
  CHECK(im[2] == Approx(std::sqrt(2.0) * 0.03).epsilon(1e-12));
}

TEST_CASE("limit of vanishing current and field") {
  MaterialParams m = preset(Figure::FIG2);
  m.Omega = 0.0;
  const DerivedParams p = derive_params(m);
  const ExpulsionSystem s = expulsion_system(p, 1e-14);
  CHECK(std::abs(s.a_bar) < 1e-13);
  CHECK(s.b_bar == Approx(p.D32));
  CHECK(s.L.row(2).norm() < 1e-13);
}

TEST_CASE("closed form exponential") {
  const DerivedParams p = fig2();
  const ExpulsionSystem s = expulsion_system(p, p.beta_e);
  CHECK(expm_L(0.0, s, p).isApprox(Mat3::Identity(), 1e-15));
  CHECK((expm_L(1.0, s, p) - series_expm(s.L)).cwiseAbs().maxCoeff() < 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tau(-100.0, 100.0);
  for (int k = 0; k < 50; ++k) {
    const double a = tau(rng), b = tau(rng);
    CHECK((expm_L(a, s, p) - series_expm(s.L * a)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((expm_L(a + b, s, p) - expm_L(a, s, p) * expm_L(b, s, p)).cwiseAbs().maxCoeff() < 1e-11);
    const double h = 1e-5;
    const Mat3 d = (expm_L(a + h, s, p) - expm_L(a - h, s, p)) / (2 * h);
    CHECK((d - s.L * expm_L(a, s, p)).cwiseAbs().maxCoeff() < 1e-8);
  }
  // The (3,3) entry is cos, not sin.
  CHECK(expm_L(0.5, s, p)(2, 2) == Approx(std::cos(std::sqrt(2.0) * 0.5 * 0.03)));
  ExpulsionSystem z = s;
  z.beta_e = 0.0;
  CHECK_THROWS_AS(expm_L(1.0, z, p), ParameterError);
}

TEST_CASE("exponential bound") {
  const DerivedParams p = fig2();
  const ExpulsionSystem s = expulsion_system(p, p.beta_e);
  const double Me = expm_bound(s, p);
  CHECK(Me >= 1.0);
  const double period = 2 * std::numbers::pi / (std::sqrt(2.0) * p.beta_e);
  for (int k = 0; k < 10000; ++k) {
    const double tau = 3.0 * period * k / 9999.0;
    CHECK(Eigen::JacobiSVD<Mat3>(expm_L(tau, s, p)).singularValues()(0) <= Me);
  }
}

TEST_CASE("eigenbasis") {
  const DerivedParams p = fig2();
  const ExpulsionSystem s = expulsion_system(p, p.beta_e);
  const Eigen::Matrix3cd S = expulsion_eigenbasis(s, p);
  const Eigen::Matrix3cd G = S.inverse() * s.L.cast<Complex>() * S;
  const double w = std::sqrt(2.0) * p.beta_e;
  // The first column carries +i sqrt(2) beta_e; the opposite order does not diagonalise.
  Eigen::Matrix3cd expected = Eigen::Matrix3cd::Zero();
  expected(0, 0) = Complex(0, w);
  expected(1, 1) = Complex(0, -w);
  CHECK((G - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((G - expected.conjugate()).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("expulsion time") {
  CHECK(expulsion_time(0.07, 0.03) == Approx(2.3372).epsilon(4e-4));
  CHECK(std::abs(expulsion_time(0.07, 0.03) - 2.3372) < 1e-3);
  CHECK(expulsion_time(0.0308, 0.03) == Approx(1.0269916).epsilon(1e-6));
  CHECK(std::abs(expulsion_time(0.0308, 0.03) - 1.0262) < 1e-3);
  CHECK(expulsion_time(1.0 / std::sqrt(2.0), 0.03) == Approx(std::numbers::pi / (2 * std::sqrt(2.0) * 0.03)));
  CHECK_THROWS_AS(expulsion_time(0.72, 0.03), TargetError);
  CHECK_THROWS_AS(expulsion_time(0.07, 0.0), ParameterError);
}

TEST_CASE("approximate expulsion") {
  const DerivedParams p = fig2();
  const ExpulsionPlan plan = plan_expulsion(p, p.K, p.beta_e, 1.0, false);
  CHECK(approx_expulsion(0.0, plan, p.lambda).norm() == 0.0);
  const Vec3 end = approx_expulsion(plan.T_e, plan, p.lambda);
  CHECK(end(2) == Approx(-p.K / p.lambda).epsilon(1e-13));
  CHECK((end - plan.xi_end).norm() < 1e-10);
  const double q = std::sqrt(1 - 2 * p.K * p.K) - 1;
  CHECK(plan.xi_end(0) == Approx(plan.a_bar * q / (2 * p.beta_e * p.lambda)));
  CHECK(plan.u_end(2) == Approx(-p.K).epsilon(1e-13));
  // xi' solves the linear system.
  const ExpulsionSystem s = expulsion_system(p, p.beta_e);
  for (double t : {0.3, 1.1, 2.0}) {
    const double h = 1e-5;
    const Vec3 d = (approx_expulsion(t + h, s, p.lambda) - approx_expulsion(t - h, s, p.lambda)) / (2 * h);
    CHECK((d - s.L * approx_expulsion(t, s, p.lambda) - s.f).norm() < 1e-6);
  }
}

TEST_CASE("linear prediction approaches the nonlinear flow in u units") {
  double prev = INFINITY;
  for (double lam : {0.011, 0.0055, 0.00275}) {
    const DerivedParams p = derive_params(apply_settings(preset(Figure::FIG2), {{"lambda", std::to_string(lam)}}));
    const ExpulsionPlan plan = plan_expulsion(p, p.K, p.beta_e, 1.0, false);
    const Trajectory tr = integrate([&](double, const Vec3& u) { return scaled_rhs<double>(u, p.beta_e_t, p); },
                                    p.s_minus, 0.0, plan.T_e);
    const double d = (tr.back() - plan.u_end).norm();
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("residual field") {
  const DerivedParams p = fig2();
  const double be = p.beta_e;
  const ExpulsionSystem s = expulsion_system(p, be);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const Vec3 V0 = residual_field_V(Vec3::Zero(), p, be);
  CHECK(V0.allFinite());
  CHECK((V0 - residual_field_V_poly(Vec3::Zero(), p, be)).norm() < 1e-9);
  for (int k = 0; k < 100; ++k) {
    const Vec3 xi(u(rng), u(rng), u(rng));
    const Vec3 V = residual_field_V_poly(xi, p, be);
    CHECK((V - residual_field_V(xi, p, be)).cwiseAbs().maxCoeff() < 1e-8 * (1 + V.norm()));
    const Vec3 full = scaled_rhs<double>(Vec3(p.s_minus + p.lambda * xi), be / p.lambda, p) / p.lambda;
    CHECK((s.L * xi + s.f + p.lambda * V - full).cwiseAbs().maxCoeff() < 1e-12);

    Mat3 fd;
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Vec3 d = Vec3::Zero();
      d(j) = h;
      fd.col(j) = (residual_field_V_poly(xi + d, p, be) - residual_field_V_poly(xi - d, p, be)) / (2 * h);
    }
    CHECK((jacobian_V(xi, p, be) - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("tabulated Jacobian differs by a constant matrix") {
  const DerivedParams p = fig2();
  const double be = p.beta_e, bt = be / p.lambda;
  Mat3 offset = Mat3::Zero();
  offset(0, 2) = -bt * p.gamma;
  offset(1, 2) = -p.D21_t * p.gamma - p.Omega * bt;
  offset(2, 1) = 2 * p.Omega * bt;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const Vec3 xi(u(rng), u(rng), u(rng));
    CHECK((jacobian_V_tabulated(xi, p, be) - jacobian_V(xi, p, be) - offset).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Lemma 1 thresholds") {
  const DerivedParams p = fig2();
  const Lemma1Thresholds l0 = lemma1_thresholds(p, 0.0, p.beta_e, 1.0, 2000);
  CHECK(l0.r_star == 0.0);
  double prev = -1;
  for (double K : {0.02, 0.04, 0.07, 0.2}) {
    const double r = lemma1_thresholds(p, K, p.beta_e, 1.0, 2000).r_star;
    CHECK(r > prev);
    prev = r;
  }
  const Lemma1Thresholds l = lemma1_thresholds(p, p.K, p.beta_e, 1.0, 20000);
  CHECK(l.M_e >= 1.0);
  CHECK(l.lambda_e > 0.0);
  CHECK(l.M1 > residual_field_V_poly(Vec3::Zero(), p, p.beta_e).norm());
  CHECK(l.lambda_e == Approx(std::min(1.0 / (4 * l.M1), std::log(2.0) / l.M2) / (expulsion_time(p.K, p.beta_e) * l.M_e)));
  CHECK(gronwall_envelope(0.0, 0.5, l, p.lambda) == Approx(l.M_e * 0.5));
}

TEST_CASE("shadowing of the expulsion stage") {
  const DerivedParams p = fig2();
  const ExpulsionPlan plan = plan_expulsion(p, p.K, p.beta_e, 1.0, true);
  const double r_in = p.lambda / (4 * plan.lemma1.M_e), r_out = p.lambda;
  const Field f = [&](double, const Vec3& u) { return scaled_rhs<double>(u, p.beta_e_t, p); };
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vec3 d = Vec3(n(rng), n(rng), n(rng)).normalized() * r_in;
    const Trajectory tr = integrate(f, Vec3(p.s_minus + d), 0.0, plan.T_e);
    worst = std::max(worst, (tr.back() - plan.u_end).norm());
  }
  CHECK(worst < r_out);
}

TEST_CASE("Gronwall envelope dominates the measured error") {
  for (double lam : {0.006, 0.003, 0.0015}) {
    const DerivedParams p = derive_params(apply_settings(preset(Figure::FIG2), {{"lambda", std::to_string(lam)}}));
    const ExpulsionPlan plan = plan_expulsion(p, p.K, p.beta_e, 1.0, true);
    const Vec3 delta0(0.3, -0.2, 0.1);
    const Trajectory tr = integrate([&](double, const Vec3& xi) { return translated_field(xi, p, p.beta_e); }, delta0,
                                    0.0, plan.T_e);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double err = (tr.states[i] - approx_expulsion(tr.times[i], plan, p.lambda)).norm();
      CHECK(err <= gronwall_envelope(tr.times[i], delta0.norm(), plan.lemma1, p.lambda));
    }
  }
}
