#pragma once

#include "cql/params.hpp"
#include "cql/types.hpp"

namespace cql {

// Linear part of the field translated to s^- and divided by lambda:
// xi' = L xi + f + lambda V(xi).
struct ExpulsionSystem {
  Mat3 L;
  Vec3 f;
  double a_bar;
  double b_bar;
  double beta_e;
};

struct Lemma1Thresholds {
  double r_star;
  double M1;  // bound on |V| over the ball of radius r_star
  double M2;  // bound on ||DV||_inf over the ball of radius r_star + rho_e
  double M_e;
  double lambda_e;
  double rho_e;
};

struct ExpulsionPlan {
  double beta_e;
  double T_e;
  double a_bar, b_bar;
  Mat3 L;
  Vec3 f;
  Vec3 xi_end;
  Vec3 u_end;
  Lemma1Thresholds lemma1;
};

ExpulsionSystem expulsion_system(const DerivedParams& p, double beta_e);

// Closed form of exp(L tau).
Mat3 expm_L(double tau, const ExpulsionSystem& sys, const DerivedParams& p);

// Similarity S with S^-1 L S = diag(i sqrt(2) beta_e, -i sqrt(2) beta_e, 0).
Eigen::Matrix3cd expulsion_eigenbasis(const ExpulsionSystem& sys, const DerivedParams& p);

double expulsion_time(double K, double beta_e);

// Approximate solution with xi'(0) = 0, tau in [0, T_e].
Vec3 approx_expulsion(double tau, const ExpulsionSystem& sys, double lambda);
inline Vec3 approx_expulsion(double tau, const ExpulsionPlan& plan, double lambda) {
  return approx_expulsion(tau, ExpulsionSystem{plan.L, plan.f, plan.a_bar, plan.b_bar, plan.beta_e}, lambda);
}

// V from its definition, through the scaled field.
Vec3 residual_field_V(const Vec3& xi, const DerivedParams& p, double beta_e);
// V as explicit polynomials in xi.
Vec3 residual_field_V_poly(const Vec3& xi, const DerivedParams& p, double beta_e);
// Exact Jacobian of V.
Mat3 jacobian_V(const Vec3& xi, const DerivedParams& p, double beta_e);
// Tabulated Jacobian entries b_ij, read with h2_t -> gamma and Omega -> -Omega
// and without the stray leading factor of b_31. Differs from jacobian_V by a
// constant matrix.
Mat3 jacobian_V_tabulated(const Vec3& xi, const DerivedParams& p, double beta_e);

// Translated field xi' = (1/lambda) scaled_rhs(s^- + lambda xi, beta_e / lambda).
Vec3 translated_field(const Vec3& xi, const DerivedParams& p, double beta_e);

// Grid maximum of the operator 2-norm of exp(L tau) over one period, x1.01, floored at 1.
double expm_bound(const ExpulsionSystem& sys, const DerivedParams& p, int grid = 2001);

Lemma1Thresholds lemma1_thresholds(const DerivedParams& p, double K, double beta_e, double rho_e,
                                   std::size_t samples = 100000);

// M_e (|delta(0)| + lambda M1 tau) exp(lambda M_e M2 tau)
double gronwall_envelope(double tau, double delta0, const Lemma1Thresholds& l1, double lambda);

ExpulsionPlan plan_expulsion(const DerivedParams& p, double K, double beta_e, double rho_e = 1.0,
                             bool with_thresholds = true);

}  // namespace cql
