#include "cql/attraction.hpp"

#include "cql/expulsion.hpp"
#include "cql/transfer.hpp"

#include <cmath>
#include <numbers>

namespace cql {

BasinSpec basin_spec(const DerivedParams& p) {
  const double O = std::abs(p.Omega), g = p.gamma;
  return {(p.D21 * g) * (p.D21 * g) / (32.0 * p.D31 * O * O), g * p.D21 / (4.0 * O * p.D31), (g / 4) * (g / 4),
          g / 4};
}

double lyapunov_W(double U2, double U3, const DerivedParams& p) {
  return 0.5 * (p.D21 * U2 * U2 + p.D31 * U3 * U3);
}

Vec3 attraction_G1(const Vec3& U, const DerivedParams& p) {
  const double U1 = U(0), U2 = U(1), U3 = U(2), g = p.gamma, O = p.Omega;
  return Vec3(p.D32 * U2 * U3 - p.D31 * O * U3, -p.D31 * U3 * (g + U1), p.D21 * U2 * (g + U1));
}

Vec3 attraction_G2(const Vec3& U, const DerivedParams& p) {
  const double u1 = p.gamma + U(0), U2 = U(1), u2 = U2 - p.Omega, U3 = U(2), O = p.Omega;
  return Vec3(p.D31 * u1 * U3 * U3 + p.D21 * u1 * u2 * U2,
              p.D32 * u2 * U3 * U3 - p.D21 * O * U3 * U3 - p.D21 * u1 * u1 * U2,
              -U3 * (p.D32 * u2 * u2 + p.D31 * u1 * u1) + p.D21 * O * u2 * U3);
}

Vec3 attraction_rhs(const Vec3& U, const DerivedParams& p) {
  return attraction_G1(U, p) + p.alpha * attraction_G2(U, p);
}

double psi_tilde(const Vec3& U, const DerivedParams& p) {
  return (U + p.s_plus).squaredNorm();
}

double surface_U1(double U2, double U3, double delta_a, const DerivedParams& p) {
  const double q = 1.0 + delta_a - (U2 - p.Omega) * (U2 - p.Omega) - U3 * U3;
  if (q < 0.0) throw ParameterError("point not on a graph over (U2, U3)");
  return -p.gamma + std::sqrt(q);
}

bool basin_contains(const Vec3& U, double delta_a, const DerivedParams& p, bool check_range) {
  const BasinSpec b = basin_spec(p);
  if (check_range && std::abs(delta_a) > b.delta_a_max) throw ParameterError("delta_a outside the admissible range |delta_a| <= (gamma/4)^2");
  return std::abs(U(0)) <= b.u1_cap && lyapunov_W(U(1), U(2), p) <= b.W_star * (1.0 + 1e-12) &&
         std::abs(psi_tilde(U, p) - (1.0 + delta_a)) < 1e-9;
}

Vec3 predicted_limit(double delta_a, const DerivedParams& p) {
  if (p.gamma * p.gamma + delta_a < 0.0) throw ParameterError("energy level below the equilibria");
  return Vec3(-p.gamma + std::sqrt(p.gamma * p.gamma + delta_a), 0.0, 0.0);
}

std::vector<Vec3> basin_boundary_points(int n, double delta_a, const DerivedParams& p) {
  const BasinSpec b = basin_spec(p);
  const double a2 = std::sqrt(2.0 * b.W_star / p.D21), a3 = std::sqrt(2.0 * b.W_star / p.D31);
  std::vector<Vec3> out;
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n;
    const double U2 = a2 * std::cos(th), U3 = a3 * std::sin(th);
    out.emplace_back(surface_U1(U2, U3, delta_a, p), U2, U3);
  }
  return out;
}

double default_attraction_horizon(const DerivedParams& p) {
  return 50.0 / (p.alpha_t * p.lambda);
}

AttractionResult run_attraction(const Vec3& U0, const DerivedParams& p, double t_max, IntegratorOptions opt,
                                bool check_range) {
  const double delta_a = psi_tilde(U0, p) - 1.0;
  if (!basin_contains(U0, delta_a, p, check_range)) throw ParameterError("initial condition outside the basin B_E");
  if (t_max <= 0.0) t_max = default_attraction_horizon(p);
  opt.stage = Stage::Attraction;
  const Field field = [&p](double, const Vec3& U) { return attraction_rhs(U, p); };

  AttractionResult res;
  Trajectory& tr = res.trajectory;
  const double psi0 = psi_tilde(U0, p);
  tr.push(0.0, U0, 0.0, Stage::Attraction);
  double W = lyapunov_W(U0(1), U0(2), p);
  res.W_series.emplace_back(0.0, W);

  int below = attraction_rhs(U0, p).norm() < kConvergedField ? 1 : 0;
  if (U0.isZero(0.0)) below = 3;
  Dopri5 s(field, 0.0, U0, opt);
  while (below < 3 && s.step(t_max)) {
    tr.dense.push(s.last_segment());
    tr.push(s.t(), s.y(), 0.0, Stage::Attraction);
    tr.psi_drift = std::max(tr.psi_drift, std::abs(psi_tilde(s.y(), p) - psi0));
    const double Wn = lyapunov_W(s.y()(1), s.y()(2), p);
    res.max_W_increase = std::max(res.max_W_increase, Wn - W);
    if (Wn - W > kLyapunovNoise)
      throw LyapunovViolation("W increased by " + std::to_string(Wn - W) + " at t = " + std::to_string(s.t()));
    W = Wn;
    res.W_series.emplace_back(s.t(), W);
    below = s.dydt().norm() < kConvergedField ? below + 1 : 0;
  }
  res.converged = below >= 3;
  res.t_converged = tr.times.back();
  res.U_infinity = tr.states.back();
  tr.limit_reached = res.converged;
  return res;
}

TheoremParams select_theorem_params(double D1, double D3, double lambda, double alpha_t, double beta_e,
                                    bool strict) {
  const double D21 = kD21Slope * lambda;
  const double D31 = D3 - D1;
  const double r = D21 / D31;
  TheoremParams out;
  out.Omega = std::sqrt(52.0 / 75.0 * r);
  out.gamma = std::sqrt(1.0 - out.Omega * out.Omega);
  out.K_bar = out.gamma / 4.0 * std::sqrt(r);
  out.h2 = -D21 * out.Omega;
  out.f = 1.0 / (2.0 * out.gamma);
  out.compatibility_margin = 3.0 * out.gamma * out.gamma * D21 - 50.0 * out.K_bar * out.K_bar * D31;
  out.compatible = out.compatibility_margin >= 0.0;
  if (strict && !out.compatible)
    throw PlanningError("theorem", "inconsistent recipe: 50 K^2 D31 > 3 gamma^2 D21");

  MaterialParams m;
  m.D1 = D1;
  m.D3 = D3;
  m.D2 = D1 + D21;
  m.lambda = lambda;
  m.alpha_t = alpha_t;
  m.Omega = out.Omega;
  m.K = out.K_bar;
  m.beta_e = beta_e;
  m.beta_e_t = beta_e / lambda;
  out.material = m;

  const DerivedParams p = derive_params(m);
  const ExpulsionPlan ex = plan_expulsion(p, out.K_bar, beta_e, 1.0, false);
  const TransferPlan tp = plan_transfer(p, ex.u_end.head<2>(), out.K_bar, true);
  out.Theta = tp.lemma2.Theta;
  out.M_e = ex.lemma1.M_e;
  out.r_minus = out.Theta * out.K_bar / (128.0 * out.M_e * (1.0 + out.Theta));
  return out;
}

}  // namespace cql
