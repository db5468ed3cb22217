#pragma once

#include "cql/integrate.hpp"
#include "cql/params.hpp"
#include "cql/types.hpp"

#include <utility>
#include <vector>

namespace cql {

// Coordinates U = u - s^+, beta = 0.

struct BasinSpec {
  double W_star;
  double r_sm;
  double delta_a_max;
  double u1_cap;
};

BasinSpec basin_spec(const DerivedParams& p);

double lyapunov_W(double U2, double U3, const DerivedParams& p);

Vec3 attraction_G1(const Vec3& U, const DerivedParams& p);
Vec3 attraction_G2(const Vec3& U, const DerivedParams& p);
Vec3 attraction_rhs(const Vec3& U, const DerivedParams& p);

double psi_tilde(const Vec3& U, const DerivedParams& p);

// U1 on the level Psi = 1 + delta_a near s^+.
double surface_U1(double U2, double U3, double delta_a, const DerivedParams& p);

// check_range = false skips the |delta_a| <= (gamma/4)^2 precondition.
bool basin_contains(const Vec3& U, double delta_a, const DerivedParams& p, bool check_range = true);

// Defined for any level with gamma^2 + delta_a >= 0.
Vec3 predicted_limit(double delta_a, const DerivedParams& p);

// n points of the basin boundary W = W_star on the level 1 + delta_a.
std::vector<Vec3> basin_boundary_points(int n, double delta_a, const DerivedParams& p);

struct AttractionResult {
  Vec3 U_infinity;
  bool converged = false;
  double t_converged = 0.0;
  std::vector<std::pair<double, double>> W_series;
  double max_W_increase = 0.0;
  Trajectory trajectory;
};

inline constexpr double kConvergedField = 1e-9;
inline constexpr double kLyapunovNoise = 1e-12;

// Integrates until the field norm stays below 1e-9 for three consecutive
// accepted steps. t_max <= 0 selects 50 / (alpha_t lambda). The level of U0
// is checked against (gamma/4)^2 only when check_range is set.
AttractionResult run_attraction(const Vec3& U0, const DerivedParams& p, double t_max = 0.0,
                                IntegratorOptions opt = {}, bool check_range = false);

double default_attraction_horizon(const DerivedParams& p);

struct TheoremParams {
  double K_bar;
  double Omega;
  double gamma;
  double h2;
  double r_minus;
  double f;
  double Theta;
  double M_e;
  double compatibility_margin;  // 3 gamma^2 D21 - 50 K_bar^2 D31
  bool compatible;
  MaterialParams material;
};

// Constructive parameter choice of the main theorem. Omega first, then gamma,
// then K_bar. strict = true turns an incompatible recipe into an error.
TheoremParams select_theorem_params(double D1, double D3, double lambda, double alpha_t = 2.0,
                                    double beta_e = kCaptionBetaE, bool strict = false);

}  // namespace cql
