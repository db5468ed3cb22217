#include "cql/expulsion.hpp"

#include "cql/dynamics.hpp"
#include "sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cql {

ExpulsionSystem expulsion_system(const DerivedParams& p, double beta_e) {
  if (!(beta_e > 0.0)) throw ParameterError("expulsion current beta_e must be positive");
  ExpulsionSystem s;
  s.beta_e = beta_e;
  s.a_bar = -p.D32 * p.Omega - beta_e * p.gamma;
  s.b_bar = p.D32 * p.gamma - beta_e * p.Omega;
  s.L << 0.0, 0.0, s.a_bar,
         0.0, 0.0, s.b_bar,
         2.0 * beta_e * p.gamma, 2.0 * beta_e * p.Omega, 0.0;
  s.f = Vec3(0.0, 0.0, -beta_e / p.lambda);
  return s;
}

Mat3 expm_L(double tau, const ExpulsionSystem& s, const DerivedParams& p) {
  const double be = s.beta_e;
  if (!(be > 0.0)) throw ParameterError("expm_L requires beta_e > 0");
  const double a = s.a_bar, b = s.b_bar, g = p.gamma, O = p.Omega;
  const double c = std::cos(std::numbers::sqrt2 * tau * be);
  const double sn = std::sin(std::numbers::sqrt2 * tau * be);
  Mat3 E;
  E << -b * O - a * g * c, a * O - a * O * c, a / std::numbers::sqrt2 * sn,
       b * g - b * g * c, -b * O * c - a * g, b / std::numbers::sqrt2 * sn,
       std::numbers::sqrt2 * be * g * sn, std::numbers::sqrt2 * be * O * sn, be * c;
  return E / be;
}

Eigen::Matrix3cd expulsion_eigenbasis(const ExpulsionSystem& s, const DerivedParams& p) {
  const Complex iw(0.0, std::numbers::sqrt2 * s.beta_e);
  Eigen::Matrix3cd S;
  S << 1.0, 1.0, 1.0,
       s.b_bar / s.a_bar, s.b_bar / s.a_bar, -p.gamma / p.Omega,
       iw / s.a_bar, -iw / s.a_bar, 0.0;
  return S;
}

double expulsion_time(double K, double beta_e) {
  if (!(beta_e > 0.0)) throw ParameterError("expulsion current beta_e must be positive");
  const double arg = std::numbers::sqrt2 * K;
  if (!(K > 0.0) || arg > 1.0) throw TargetError("target unreachable: need 0 < sqrt(2) K <= 1");
  return std::asin(arg) / (std::numbers::sqrt2 * beta_e);
}

Vec3 approx_expulsion(double tau, const ExpulsionSystem& s, double lambda) {
  const double be = s.beta_e;
  const double c = std::cos(std::numbers::sqrt2 * tau * be) - 1.0;
  const double sn = std::sin(std::numbers::sqrt2 * tau * be);
  return Vec3(s.a_bar * c, s.b_bar * c, -std::numbers::sqrt2 * be * sn) / (2.0 * be * lambda);
}

Vec3 translated_field(const Vec3& xi, const DerivedParams& p, double beta_e) {
  return scaled_rhs<double>(p.s_minus + p.lambda * xi, beta_e / p.lambda, p) / p.lambda;
}

Vec3 residual_field_V(const Vec3& xi, const DerivedParams& p, double beta_e) {
  const ExpulsionSystem s = expulsion_system(p, beta_e);
  return (translated_field(xi, p, beta_e) - s.L * xi - s.f) / p.lambda;
}

Vec3 residual_field_V_poly(const Vec3& xi, const DerivedParams& p, double beta_e) {
  const double x1 = xi(0), x2 = xi(1), x3 = xi(2);
  const double l = p.lambda, a = p.alpha_t, D = p.D21_t, D32 = p.D32, O = p.Omega, g = p.gamma;
  const double b = beta_e / l;
  const double l2 = l * l, l3 = l2 * l;
  Vec3 V;
  V(0) = -D * O * x3 + D32 * x2 * x3 +
         l * (D * O * a * g * x2 - D32 * a * g * x3 * x3 + b * x1 * x3) +
         l2 * (-D * O * a * x1 * x2 - D * a * g * x2 * x2 - D * a * g * x3 * x3 + D32 * a * x1 * x3 * x3) +
         l3 * D * a * x1 * (x2 * x2 + x3 * x3);
  V(1) = D * g * x3 - D32 * x1 * x3 +
         l * (D * O * O * a * x2 - D * a * x2 - D * x1 * x3 - D32 * O * a * x3 * x3 + b * x2 * x3) +
         l2 * (-D * O * a * x3 * x3 + 2.0 * D * a * g * x1 * x2 + D32 * a * x2 * x3 * x3) -
         l3 * D * a * x1 * x1 * x2;
  V(2) = -D * g * x2 - D32 * a * x3 +
         l * (-D * a * x3 + D * x1 * x2 + 2.0 * D32 * O * a * x2 * x3 + 2.0 * D32 * a * g * x1 * x3 -
              b * (x1 * x1 + x2 * x2)) +
         l2 * (D * O * a * x2 * x3 + 2.0 * D * a * g * x1 * x3 - D32 * a * (x1 * x1 + x2 * x2) * x3) -
         l3 * D * a * x1 * x1 * x3;
  return V;
}

Mat3 jacobian_V(const Vec3& xi, const DerivedParams& p, double beta_e) {
  const double x1 = xi(0), x2 = xi(1), x3 = xi(2);
  const double l = p.lambda, a = p.alpha_t, D = p.D21_t, D32 = p.D32, O = p.Omega, g = p.gamma;
  const double b = beta_e / l;
  const double l2 = l * l, l3 = l2 * l;
  Mat3 J;
  J(0, 0) = b * l * x3 + l2 * (-D * O * a * x2 + D32 * a * x3 * x3) + l3 * D * a * (x2 * x2 + x3 * x3);
  J(0, 1) = D32 * x3 + D * O * a * g * l + l2 * (-D * O * a * x1 - 2.0 * D * a * g * x2) + 2.0 * D * a * l3 * x1 * x2;
  J(0, 2) = -D * O + D32 * x2 + l * (-2.0 * D32 * a * g * x3 + b * x1) +
            l2 * (-2.0 * D * a * g * x3 + 2.0 * D32 * a * x1 * x3) + 2.0 * D * a * l3 * x1 * x3;
  J(1, 0) = -D32 * x3 - D * l * x3 + 2.0 * D * a * g * l2 * x2 - 2.0 * D * a * l3 * x1 * x2;
  J(1, 1) = l * (D * O * O * a - D * a + b * x3) + l2 * (2.0 * D * a * g * x1 + D32 * a * x3 * x3) -
            D * a * l3 * x1 * x1;
  J(1, 2) = D * g - D32 * x1 + l * (-D * x1 - 2.0 * D32 * O * a * x3 + b * x2) +
            l2 * (-2.0 * D * O * a * x3 + 2.0 * D32 * a * x2 * x3);
  J(2, 0) = l * (D * x2 + 2.0 * D32 * a * g * x3 - 2.0 * b * x1) +
            l2 * (2.0 * D * a * g * x3 - 2.0 * D32 * a * x1 * x3) - 2.0 * D * a * l3 * x1 * x3;
  J(2, 1) = -D * g + l * (D * x1 + 2.0 * D32 * O * a * x3 - 2.0 * b * x2) +
            l2 * (D * O * a * x3 - 2.0 * D32 * a * x2 * x3);
  J(2, 2) = -D32 * a + l * (-D * a + 2.0 * D32 * O * a * x2 + 2.0 * D32 * a * g * x1) +
            l2 * (D * O * a * x2 + 2.0 * D * a * g * x1 - D32 * a * (x1 * x1 + x2 * x2)) -
            D * a * l3 * x1 * x1;
  return J;
}

Mat3 jacobian_V_tabulated(const Vec3& xi, const DerivedParams& p, double beta_e) {
  const double x1 = xi(0), x2 = xi(1), x3 = xi(2);
  const double l = p.lambda, a = p.alpha_t, D = p.D21_t, D31 = p.D31, D32 = p.D32;
  const double h = p.gamma, O = -p.Omega, b = beta_e / l;
  const double l2 = l * l, l3 = l2 * l;
  Mat3 B;
  B(0, 0) = x3 * b * l + a * (D * x2 * O + D31 * x3 * x3) * l2 + a * D * x2 * x2 * l3;
  B(0, 1) = D32 * x3 - a * D * O * h * l + a * D * (x1 * O - 2 * x2 * h) * l2 + 2 * a * D * x1 * x2 * l3;
  B(0, 2) = (-b * h + D * O + D32 * x2) + (x1 * b - 2 * a * D31 * x3 * h) * l + 2 * a * D31 * x1 * x3 * l2;
  B(1, 0) = -D31 * x3 + 2 * a * D * x2 * h * l2 - 2 * a * D * x1 * x2 * l3;
  B(1, 1) = (x3 * b - a * D * p.gamma * p.gamma) * l + a * (2 * D * x1 * h + D32 * x3 * x3) * l2 - a * D * x1 * x1 * l3;
  B(1, 2) = b * O - D31 * x1 + (2 * a * D32 * x3 * O + x2 * b) * l + 2 * a * x3 * (D * O + D32 * x2) * l2;
  B(2, 0) = (2 * a * D31 * x3 * h - 2 * x1 * b + D * x2) * l - 2 * a * D31 * x1 * x3 * l2;
  B(2, 1) = -(D * h + 2 * b * O) + (-2 * a * D32 * x3 * O - 2 * x2 * b + D * x1) * l -
            a * x3 * (D * O + 2 * D32 * x2) * l2;
  B(2, 2) = -a * (D31 * h * h + D32 * O * O) + a * (2 * D31 * x1 * h - D * O * O - 2 * D32 * x2 * O) * l -
            a * (D * x2 * O + D32 * x2 * x2 + D31 * x1 * x1) * l2;
  return B;
}

double expm_bound(const ExpulsionSystem& s, const DerivedParams& p, int grid) {
  const double period = 2.0 * std::numbers::pi / (std::numbers::sqrt2 * s.beta_e);
  double m = 1.0;
  for (int k = 0; k < grid; ++k) {
    const double tau = period * k / (grid - 1);
    Eigen::JacobiSVD<Mat3> svd(expm_L(tau, s, p));
    m = std::max(m, svd.singularValues()(0));
  }
  return std::max(1.0, 1.01 * m);
}

Lemma1Thresholds lemma1_thresholds(const DerivedParams& p, double K, double beta_e, double rho_e,
                                   std::size_t samples) {
  if (!(rho_e > 0.0)) throw ParameterError("rho_e must be positive");
  const ExpulsionSystem s = expulsion_system(p, beta_e);
  Lemma1Thresholds out;
  out.rho_e = rho_e;
  const double q = std::sqrt(1.0 - 2.0 * K * K) - 1.0;
  out.r_star = std::sqrt(4.0 * K * K + (p.D32 * p.D32 + beta_e * beta_e) * q * q) / (2.0 * beta_e * p.lambda);

  double m1 = 0.0, m2 = 0.0;
  const double R2 = out.r_star + rho_e;
  for (std::size_t i = 0; i < samples; ++i) {
    const bool surface = (i % 3 == 0);
    m1 = std::max(m1, residual_field_V_poly(detail::halton_ball(i, out.r_star, surface), p, beta_e).norm());
    const Mat3 J = jacobian_V(detail::halton_ball(i, R2, surface), p, beta_e);
    m2 = std::max(m2, J.cwiseAbs().rowwise().sum().maxCoeff());
  }
  out.M1 = 1.25 * m1;
  out.M2 = 1.25 * m2;
  out.M_e = expm_bound(s, p);
  const double T_e = K > 0.0 ? expulsion_time(K, beta_e) : 0.0;
  out.lambda_e = T_e > 0.0 ? std::min(rho_e / (4.0 * out.M1), std::log(2.0) / out.M2) / (T_e * out.M_e)
                           : std::numeric_limits<double>::infinity();
  return out;
}

double gronwall_envelope(double tau, double delta0, const Lemma1Thresholds& l1, double lambda) {
  return l1.M_e * (delta0 + lambda * l1.M1 * tau) * std::exp(lambda * l1.M_e * l1.M2 * tau);
}

ExpulsionPlan plan_expulsion(const DerivedParams& p, double K, double beta_e, double rho_e, bool with_thresholds) {
  const ExpulsionSystem s = expulsion_system(p, beta_e);
  ExpulsionPlan plan;
  plan.beta_e = beta_e;
  plan.T_e = expulsion_time(K, beta_e);
  plan.a_bar = s.a_bar;
  plan.b_bar = s.b_bar;
  plan.L = s.L;
  plan.f = s.f;
  const double q = std::sqrt(1.0 - 2.0 * K * K) - 1.0;
  plan.xi_end = Vec3(s.a_bar * q, s.b_bar * q, -2.0 * K * beta_e) / (2.0 * beta_e * p.lambda);
  plan.u_end = p.s_minus + p.lambda * plan.xi_end;
  if (with_thresholds)
    plan.lemma1 = lemma1_thresholds(p, K, beta_e, rho_e);
  else
    plan.lemma1 = Lemma1Thresholds{0, 0, 0, expm_bound(s, p), 0, rho_e};
  return plan;
}

}  // namespace cql
