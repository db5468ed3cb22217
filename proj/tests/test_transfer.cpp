#include <doctest.h>

#include "cql/dynamics.hpp"
#include "cql/integrate.hpp"
#include "cql/transfer.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace cql;
using doctest::Approx;

namespace {

DerivedParams fig2() { return derive_params(preset(Figure::FIG2)); }

std::vector<CVec2> complex_samples(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<CVec2> out;
  for (int k = 0; k < n; ++k) out.emplace_back(Complex(u(rng), u(rng)), Complex(u(rng), u(rng)));
  return out;
}

}  // namespace

TEST_CASE("derived frequencies") {
  const DerivedParams p = fig2();
  CHECK(p.sigma == Approx(std::sqrt(0.74 / 0.8116)).epsilon(1e-12));
  CHECK(p.sigma == Approx(0.954871).epsilon(1e-6));
  CHECK(p.omega == Approx(0.054249).epsilon(1e-5));
  CHECK(p.rho == Approx(1.004924).epsilon(1e-6));
  const Eigen::Matrix2d A = transfer_linear(p, p.K);
  const Eigen::Vector2cd ev = A.eigenvalues();
  CHECK(std::abs(ev(0).real()) < 1e-15);
  CHECK(std::abs(std::abs(ev(0).imag()) - p.omega) < 1e-15);
}

TEST_CASE("transfer field matches the latitudinal reduction") {
  const DerivedParams p = fig2();
  const double K = p.K;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
  for (int k = 0; k < 50; ++k) {
    const double a = ang(rng);
    const double r = std::sqrt(1 - K * K);
    const Vec3 v(r * std::cos(a), r * std::sin(a), -K);
    const Vec3 f = latitudinal_rhs<double>(v, p, K);
    const Vec2 w = v.head<2>();
    const Vec2 g = transfer_linear(p, K) * w + p.lambda * transfer_field_Fr(w, p, K);
    const FRFields fr = latitude_fields(w, p, K);
    CHECK((f.head<2>() - g - p.lambda * p.lambda * fr.R.head<2>()).norm() < 1e-14);
    CHECK((f.head<2>() - g).norm() < 10 * p.lambda * p.lambda);
    const CVec2 gc = transfer_field_Fr(CVec2(w.cast<Complex>()), p, K);
    CHECK((gc.real() - transfer_field_Fr(w, p, K)).norm() < 1e-15);
  }
}

TEST_CASE("normal form basis") {
  const DerivedParams p = fig2();
  const CMat2 C = normal_form_C(p);
  const CMat2 L = C.inverse() * transfer_linear(p, p.K).cast<Complex>() * C;
  CHECK(std::abs(L(0, 0) - Complex(0, p.omega)) < 1e-15);
  CHECK(std::abs(L(1, 1) - Complex(0, -p.omega)) < 1e-15);
  CHECK(std::abs(L(0, 1)) < 1e-15);
  CHECK(std::abs(L(1, 0)) < 1e-15);
}

TEST_CASE("normal form coefficients") {
  const DerivedParams p = fig2();
  const NormalFormCoefficients c = normal_form_coefficients(p, p.K);
  const double tol = 1e-6;
  // Entries that agree with the printed table.
  CHECK(std::abs(c.at(0, 2, 0) - Complex(0, 0.571264)) < tol);
  CHECK(std::abs(c.at(0, 0, 2) - Complex(0, -0.008787)) < tol);
  CHECK(std::abs(c.at(1, 2, 0) - Complex(0, 0.008787)) < tol);
  CHECK(std::abs(c.at(1, 0, 2) - Complex(0, -0.571264)) < tol);
  // The mixed term carries i h2_t K rho / (sigma omega), not the extra 1/sigma.
  const double c11 = p.h2_t * p.K * p.rho / (p.sigma * p.omega);
  CHECK(std::abs(c.at(1, 1, 1) - Complex(0, c11)) < 1e-12);
  CHECK(std::abs(c.at(0, 1, 1) + Complex(0, c11)) < 1e-12);
  CHECK(std::abs(c.at(1, 1, 1) - Complex(0, -0.570656)) > 1e-2);
  // Cubic terms: c30, c12 in the first component, c21, c03 in the second.
  for (auto [j, a, b] : {std::tuple{0, 3, 0}, {0, 1, 2}, {1, 2, 1}, {1, 0, 3}})
    CHECK(std::abs(c.at(j, a, b) - 4.030345) < tol);
  for (auto [j, a, b] : {std::tuple{0, 2, 1}, {0, 0, 3}, {1, 3, 0}, {1, 1, 2}}) CHECK(std::abs(c.at(j, a, b)) < 1e-14);
  CHECK_THROWS_AS(normal_form_coefficients(p, 0.0), PlanningError);
}

TEST_CASE("homological equation") {
  const DerivedParams p = fig2();
  const auto samples = complex_samples(100, 7);
  NormalFormCoefficients c = normal_form_coefficients(p, p.K);
  CHECK(homological_residual(c, p, p.K, samples) < 1e-12);
  for (int k = 0; k < 7; ++k) {
    NormalFormCoefficients d = c;
    const int j = k % 2;
    const Monomial m = kNormalFormMonomials[k];
    // x1^2 x2 in the first and x1 x2^2 in the second component are resonant.
    if ((j == 0 && m.a == 2 && m.b == 1) || (j == 1 && m.a == 1 && m.b == 2)) continue;
    d.c[j][k] += 1e-3;
    CHECK(homological_residual(d, p, p.K, samples) > 1e-5);
  }
  // Jacobian of C(x) against finite differences.
  for (const CVec2& x : complex_samples(10, 8)) {
    const double h = 1e-6;
    CMat2 fd;
    for (int j = 0; j < 2; ++j) {
      CVec2 d = CVec2::Zero();
      d(j) = h;
      fd.col(j) = (c.eval(x + d) - c.eval(x - d)) / (2 * h);
    }
    CHECK((fd - c.jacobian(x)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("initial normal coordinates") {
  DerivedParams p = fig2();
  p.lambda = 0.0;
  const NormalFormCoefficients c = normal_form_coefficients(p, p.K);
  const NormalCoords x = initial_normal_coords(Vec2(-0.9, -0.1), c, p, p.K);
  CHECK(x.X_a == Approx(-0.9 / (2 * p.sigma)).epsilon(1e-14));
  CHECK(x.X_a == Approx(-0.471268).epsilon(1e-5));
  CHECK(x.X_b == Approx(-0.05).epsilon(1e-14));
  CHECK(std::abs(x.X0(1) - std::conj(x.X0(0))) < 1e-14);

  const DerivedParams q = fig2();
  const NormalCoords y = initial_normal_coords(Vec2(-0.9, -0.1), c, q, q.K);
  CHECK(std::abs(y.X0(1) - std::conj(y.X0(0))) < 1e-12);
  CHECK(std::abs(y.X_a - x.X_a) > 0.0);
}

TEST_CASE("transfer time") {
  const DerivedParams p = fig2();
  const TransferTiming t = transfer_time(Vec2(-0.9, -0.1), p, 0.07);
  CHECK(t.A_m == Approx(-0.9 * std::sqrt(1 + std::pow(p.sigma * 0.1 / 0.9, 2))).epsilon(1e-14));
  CHECK(t.A_m == Approx(-0.905051).epsilon(1e-6));
  CHECK(t.phi == Approx(0.105693).epsilon(1e-5));
  CHECK(t.T_tr == Approx((std::acos(-1 - 0.0049 / t.A_m) - t.phi) / p.omega).epsilon(1e-14));
  CHECK(t.T_tr == Approx(54.045).epsilon(1e-4));
  CHECK(t.T_tr <= std::numbers::pi / p.omega);
  CHECK(t.A_m <= -0.1);
  // First crossing of w1^[0](t) = -A_m - K^2.
  const double target = -t.A_m - 0.0049;
  for (int k = 0; k < 1000; ++k) {
    const double s = t.T_tr * k / 1000.0;
    CHECK(t.A_m * std::cos(p.omega * s + t.phi) < target);
  }
  CHECK_THROWS_AS(transfer_time(Vec2(0.5, -0.1), p, 0.07), PlanningError);
  CHECK_THROWS_AS(transfer_time(Vec2(-0.001, -0.001), p, 0.07), TargetError);
}

TEST_CASE("first order transfer solution") {
  const DerivedParams p = fig2();
  const Vec2 w0(-0.9, -0.1);
  const TransferPlan plan = plan_transfer(p, w0, p.K, false);
  const double l2 = p.lambda * p.lambda;
  CHECK((approx_transfer_solution_composed(0.0, plan, p) - w0).norm() < 10 * l2);
  CHECK((approx_transfer_solution(0.0, plan, p) - w0).norm() < 10 * l2);
  for (int k = 0; k <= 100; ++k) {
    const double t = plan.T_tr * k / 100.0;
    CHECK((approx_transfer_solution(t, plan, p) - approx_transfer_solution_composed(t, plan, p)).norm() < 1e-12);
    const double h = 1e-5;
    const Vec2 fd = (approx_transfer_solution_composed(t + h, plan, p) -
                     approx_transfer_solution_composed(t - h, plan, p)) / (2 * h);
    CHECK((fd - approx_transfer_derivative(t, plan, p)).norm() < 1e-8);
  }
  // Endpoint near (-A_m - K^2, -Omega) up to O(lambda).
  const Vec2 end = approx_transfer_solution(plan.T_tr, plan, p);
  CHECK(std::abs(end(0) - (-plan.A_m - p.K * p.K)) < 20 * p.lambda);

  // Shadowing of the latitudinal flow.
  const Trajectory tr = integrate([&](double, const Vec3& v) { return latitudinal_rhs<double>(v, p, p.K); },
                                  Vec3(w0(0), w0(1), -p.K), 0.0, plan.T_tr);
  for (std::size_t i = 0; i < tr.size(); i += 5)
    CHECK((tr.states[i].head<2>() - approx_transfer_solution(tr.times[i], plan, p)).norm() < 20 * l2 * plan.T_tr);
}

TEST_CASE("Lemma 2 thresholds") {
  const DerivedParams p = fig2();
  const TransferPlan plan = plan_transfer(p, Vec2(-0.9, -0.1), p.K, true);
  const Lemma2Thresholds& l = plan.lemma2;
  CHECK(l.M_tr >= 1.0);
  CHECK(l.K_w >= 1.0);
  CHECK(l.Theta > 0.0);
  CHECK(l.lambda_tr == Approx(p.omega * p.omega / (4 * std::numbers::pi * std::numbers::pi * l.K_w * l.M_tr)));
  CHECK(l.rho_tr_minus == Approx(l.Theta * l.rho_tr_plus / (4 * (1 + l.Theta))));
  CHECK(l.rho_tr_minus < l.rho_tr_plus);
}

TEST_CASE("control waveform") {
  const DerivedParams p = fig2();
  const ExpulsionPlan ex = plan_expulsion(p, p.K, p.beta_e, 1.0, false);
  const TransferPlan tp = plan_transfer(p, ex.u_end.head<2>(), p.K, false);
  const ControlWaveform c = synthesize_control(tp, ex, p);
  CHECK(c.T_e() == Approx(ex.T_e));
  CHECK(c.beta_t(-0.5 * ex.T_e) == p.beta_e_t);
  CHECK(c.beta_t(-ex.T_e - 1e-9) == 0.0);
  CHECK(c.beta_t(tp.T_tr + 1e-9) == 0.0);
  CHECK(c.beta(-0.5) == Approx(p.beta_e));
  for (double t : {0.0, 1.0, 0.5 * tp.T_tr}) {
    CHECK(c.beta_t(t) == c.transfer_beta_t(t));
    const Vec2 w = approx_transfer_solution(t, tp, p);
    CHECK(c.transfer_beta_t(t) == Approx(beta_lat<double>(Vec3(w(0), w(1), -p.K), p, p.K)));
  }
  CHECK(c.jump_at_zero() == Approx(c.transfer_beta_t(0.0) - p.beta_e_t));
  const ControlWaveform e = c.with_expulsion_scale(1.1);
  CHECK(e.T_e() == Approx(1.1 * ex.T_e));
  const ControlWaveform s = c.with_transfer_time_scale(1.1);
  CHECK(s.transfer_beta_t(2.0) == Approx(c.transfer_beta_t(2.2)));
  CHECK_THROWS_AS(plan_transfer(derive_params(apply_settings(preset(Figure::FIG2), {{"k_target", "0"}})),
                                Vec2(-0.9, -0.1), 0.0, false),
                  PlanningError);
}
