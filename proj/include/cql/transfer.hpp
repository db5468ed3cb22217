#pragma once

#include "cql/expulsion.hpp"
#include "cql/params.hpp"
#include "cql/types.hpp"

#include <array>
#include <memory>
#include <vector>

namespace cql {

struct Monomial {
  int a;
  int b;
};

// x1^a x2^b for the quadratic and cubic terms of the generating function.
inline constexpr std::array<Monomial, 7> kNormalFormMonomials = {
    {{2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}}};

struct NormalFormCoefficients {
  // c[j][k] multiplies kNormalFormMonomials[k] in component j.
  std::array<std::array<Complex, 7>, 2> c{};

  Complex at(int j, int a, int b) const;
  CVec2 eval(const CVec2& x) const;
  CMat2 jacobian(const CVec2& x) const;
};

// w' = A w + lambda F_r(w) on the latitude u3 = -K.
Eigen::Matrix2d transfer_linear(const DerivedParams& p, double K);
Vec2 transfer_field_Fr(const Vec2& w, const DerivedParams& p, double K);
CVec2 transfer_field_Fr(const CVec2& w, const DerivedParams& p, double K);

// w = C x diagonalises A with eigenvalues (i omega, -i omega).
CMat2 normal_form_C(const DerivedParams& p);

NormalFormCoefficients normal_form_coefficients(const DerivedParams& p, double K);

// max |DC(x) Lambda x - Lambda C(x) - C^-1 F_r(C x)| over the samples.
double homological_residual(const NormalFormCoefficients& coeffs, const DerivedParams& p, double K,
                            const std::vector<CVec2>& samples);

struct NormalCoords {
  double X_a;
  double X_b;
  CVec2 X0;
};

NormalCoords initial_normal_coords(const Vec2& w0, const NormalFormCoefficients& coeffs, const DerivedParams& p,
                                   double K);

struct TransferTiming {
  double T_tr;
  double A_m;
  double phi;
};

TransferTiming transfer_time(const Vec2& w0, const DerivedParams& p, double K);

struct Lemma2Thresholds {
  double M_tr;
  double K_w;
  double lambda_tr;
  double Theta;
  double rho_tr_plus;
  double rho_tr_minus;
};

struct TransferPlan {
  double K, lambda, omega, sigma, rho;
  Vec2 w0;
  double X_a, X_b;
  double A_m, phi, T_tr;
  NormalFormCoefficients coeffs;
  Lemma2Thresholds lemma2;
};

// Closed form of the first order solution.
Vec2 approx_transfer_solution(double t, const TransferPlan& plan, const DerivedParams& p);
// Same solution through w = C (X + lambda C(X)), X(t) = exp(Lambda t) X(0).
Vec2 approx_transfer_solution_composed(double t, const TransferPlan& plan, const DerivedParams& p);
// Exact time derivative of the composed form.
Vec2 approx_transfer_derivative(double t, const TransferPlan& plan, const DerivedParams& p);

Lemma2Thresholds lemma2_thresholds(const TransferPlan& plan, const DerivedParams& p, double rho_tr_plus,
                                   std::size_t samples = 100000);

TransferPlan plan_transfer(const DerivedParams& p, const Vec2& w0, double K, bool with_thresholds = true);

// Piecewise control of the three stages in scaled units.
class ControlWaveform {
 public:
  ControlWaveform(std::shared_ptr<const TransferPlan> plan, const DerivedParams& p, double beta_e_t, double T_e);

  double beta_t(double t) const;
  double beta(double t) const { return lambda_ * beta_t(t); }
  double transfer_beta_t(double t) const;

  double T_e() const { return T_e_; }
  double T_tr() const { return plan_->T_tr; }
  double beta_e_t() const { return beta_e_t_; }
  const TransferPlan& plan() const { return *plan_; }

  // Perturbations: expulsion window scaled to j T_e, transfer argument to j t.
  ControlWaveform with_expulsion_scale(double j) const;
  ControlWaveform with_transfer_time_scale(double j) const;
  double transfer_time_scale() const { return time_scale_; }

  double jump_at_zero() const { return transfer_beta_t(0.0) - beta_e_t_; }

 private:
  std::shared_ptr<const TransferPlan> plan_;
  DerivedParams p_;
  double beta_e_t_;
  double T_e_;
  double lambda_;
  double time_scale_ = 1.0;
};

ControlWaveform synthesize_control(const TransferPlan& plan, const ExpulsionPlan& expl, const DerivedParams& p);

}  // namespace cql
