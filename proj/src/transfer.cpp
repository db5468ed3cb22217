#include "cql/transfer.hpp"

#include "cql/dynamics.hpp"
#include "sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cql {

namespace {

constexpr Complex I(0.0, 1.0);

Complex monomial(const CVec2& x, Monomial m) {
  return std::pow(x(0), m.a) * std::pow(x(1), m.b);
}

double frequency(const DerivedParams& p, double K) {
  return K * std::sqrt(p.D32 * p.D31);
}

CVec2 eigenvalues(const DerivedParams& p, double K) {
  const double om = frequency(p, K);
  return CVec2(I * om, -I * om);
}

CVec2 G_field(const CVec2& x, const DerivedParams& p, double K) {
  const CMat2 C = normal_form_C(p);
  return C.inverse() * transfer_field_Fr(CVec2(C * x), p, K);
}

}  // namespace

Complex NormalFormCoefficients::at(int j, int a, int b) const {
  for (std::size_t k = 0; k < kNormalFormMonomials.size(); ++k)
    if (kNormalFormMonomials[k].a == a && kNormalFormMonomials[k].b == b) return c[j][k];
  return Complex(0.0);
}

CVec2 NormalFormCoefficients::eval(const CVec2& x) const {
  CVec2 out = CVec2::Zero();
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < kNormalFormMonomials.size(); ++k) out(j) += c[j][k] * monomial(x, kNormalFormMonomials[k]);
  return out;
}

CMat2 NormalFormCoefficients::jacobian(const CVec2& x) const {
  CMat2 J = CMat2::Zero();
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < kNormalFormMonomials.size(); ++k) {
      const auto [a, b] = kNormalFormMonomials[k];
      if (a > 0) J(j, 0) += c[j][k] * double(a) * std::pow(x(0), a - 1) * std::pow(x(1), b);
      if (b > 0) J(j, 1) += c[j][k] * double(b) * std::pow(x(0), a) * std::pow(x(1), b - 1);
    }
  return J;
}

Eigen::Matrix2d transfer_linear(const DerivedParams& p, double K) {
  Eigen::Matrix2d A;
  A << 0.0, -p.D32 * K, p.D31 * K, 0.0;
  return A;
}

Vec2 transfer_field_Fr(const Vec2& w, const DerivedParams& p, double K) {
  const FRFields fr = latitude_fields(w, p, K);
  return fr.F.head<2>();
}

CVec2 transfer_field_Fr(const CVec2& w, const DerivedParams& p, double K) {
  const double rho = 1.0 / (1.0 - K * K), h = p.h2_t, D = p.D21_t;
  const Complex w1 = w(0), w2 = w(1);
  return CVec2(-rho * K * w2 * (h * w2 + D * w1 * w1), rho * K * w1 * (h * w2 - D * w2 * w2));
}

CMat2 normal_form_C(const DerivedParams& p) {
  CMat2 C;
  C << p.sigma, p.sigma, -I, I;
  return C;
}

NormalFormCoefficients normal_form_coefficients(const DerivedParams& p, double K) {
  if (!(K > 0.0)) throw PlanningError("transfer", "normal form needs K > 0 (omega = 0)");
  const double om = frequency(p, K);
  // Monomial coefficients of G(x) = C^-1 F_r(C x) by collocation.
  constexpr int n = 24;
  Eigen::Matrix<Complex, n, 7> V;
  Eigen::Matrix<Complex, n, 2> G;
  for (int s = 0; s < n; ++s) {
    const double r1 = 0.4 + 0.5 * detail::radical_inverse(s + 1, 2);
    const double r2 = 0.4 + 0.5 * detail::radical_inverse(s + 1, 3);
    const double t1 = 2.0 * std::numbers::pi * detail::radical_inverse(s + 1, 5);
    const double t2 = 2.0 * std::numbers::pi * detail::radical_inverse(s + 1, 7);
    const CVec2 x(std::polar(r1, t1), std::polar(r2, t2));
    for (int k = 0; k < 7; ++k) V(s, k) = monomial(x, kNormalFormMonomials[k]);
    G.row(s) = G_field(x, p, K).transpose();
  }
  const Eigen::Matrix<Complex, 7, 2> g = V.colPivHouseholderQr().solve(G);
  const CVec2 lam = eigenvalues(p, K);
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  NormalFormCoefficients out;
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 7; ++k) {
      const auto [a, b] = kNormalFormMonomials[k];
      const Complex den = I * om * double(a - b) - lam(j);
      if (std::abs(den) < 1e-14 * om) {
        if (std::abs(g(k, j)) > 1e-12 * scale)
          throw PlanningError("transfer", "resonant term in the first order normal form");
        out.c[j][k] = 0.0;
      } else {
        out.c[j][k] = g(k, j) / den;
      }
    }
  return out;
}

double homological_residual(const NormalFormCoefficients& coeffs, const DerivedParams& p, double K,
                            const std::vector<CVec2>& samples) {
  const CVec2 lam = eigenvalues(p, K);
  double r = 0.0;
  for (const CVec2& x : samples) {
    const CVec2 lx = lam.cwiseProduct(x);
    const CVec2 lhs = coeffs.jacobian(x) * lx - lam.cwiseProduct(coeffs.eval(x));
    r = std::max(r, (lhs - G_field(x, p, K)).cwiseAbs().maxCoeff());
  }
  return r;
}

NormalCoords initial_normal_coords(const Vec2& w0, const NormalFormCoefficients& coeffs, const DerivedParams& p,
                                   double /*K*/) {
  const CMat2 C = normal_form_C(p);
  const CVec2 x = C.inverse() * w0.cast<Complex>();
  NormalCoords out;
  out.X0 = x - p.lambda * coeffs.eval(x);
  out.X_a = out.X0(0).real();
  out.X_b = out.X0(0).imag();
  return out;
}

TransferTiming transfer_time(const Vec2& w0, const DerivedParams& p, double K) {
  if (!(w0(0) < 0.0)) throw PlanningError("transfer", "invalid start: w1(0) must be negative");
  const double om = frequency(p, K);
  if (!(om > 0.0)) throw PlanningError("transfer", "omega = 0");
  const double ratio = p.sigma * w0(1) / w0(0);
  TransferTiming out;
  out.A_m = w0(0) * std::sqrt(1.0 + ratio * ratio);
  out.phi = std::atan(ratio);
  if (!(K * K < std::abs(out.A_m))) throw TargetError("K^2 must be below |A_m|");
  const double arg = -1.0 - K * K / out.A_m;
  if (arg < -1.0 || arg > 1.0) throw TargetError("transfer target overshoot: arccos argument outside [-1, 1]");
  out.T_tr = (std::acos(arg) - out.phi) / om;
  if (!(out.T_tr > 0.0)) throw TargetError("transfer target reached before t = 0");
  return out;
}

Vec2 approx_transfer_solution(double t, const TransferPlan& pl, const DerivedParams& p) {
  const double s = pl.sigma, om = pl.omega, Xa = pl.X_a, Xb = pl.X_b;
  const double h = p.h2_t, D = p.D21_t;
  const double T = om * t;
  const double c1 = std::cos(T), s1 = std::sin(T), c2 = std::cos(2 * T), s2 = std::sin(2 * T);
  const double c3 = std::cos(3 * T), s3 = std::sin(3 * T);
  const double r2 = Xa * Xa + Xb * Xb;
  const double pre = pl.lambda / om * pl.K * pl.rho;
  const double w1 = 2 * s * (Xa * c1 - Xb * s1) +
                    pre * (D * s * s * r2 * (Xa * c1 - Xb * s1) +
                           2.0 / 3.0 * h * (s * s + 2) * (2 * Xa * Xb * c2 - (Xb * Xb - Xa * Xa) * s2) -
                           D * s * s * (Xa * (3 * Xb * Xb - Xa * Xa) * c3 - Xb * (Xb * Xb - 3 * Xa * Xa) * s3));
  const double w2 = 2 * (Xb * c1 + Xa * s1) +
                    pre * (-D * s * r2 * (Xb * c1 + Xa * s1) +
                           2.0 / 3.0 * h * (2 * s * s + 1) / s * ((Xb * Xb - Xa * Xa) * c2 + 2 * Xa * Xb * s2) -
                           D * s * (Xb * (Xb * Xb - 3 * Xa * Xa) * c3 + Xa * (3 * Xb * Xb - Xa * Xa) * s3) -
                           2 * h * r2 / s);
  return Vec2(w1, w2);
}

namespace {

CVec2 normal_flow(double t, const TransferPlan& pl) {
  const Complex X1(pl.X_a, pl.X_b);
  const Complex e = std::polar(1.0, pl.omega * t);
  return CVec2(X1 * e, std::conj(X1) * std::conj(e));
}

}  // namespace

Vec2 approx_transfer_solution_composed(double t, const TransferPlan& pl, const DerivedParams& p) {
  const CVec2 X = normal_flow(t, pl);
  return (normal_form_C(p) * (X + pl.lambda * pl.coeffs.eval(X))).real();
}

Vec2 approx_transfer_derivative(double t, const TransferPlan& pl, const DerivedParams& p) {
  const CVec2 X = normal_flow(t, pl);
  const CVec2 dX = eigenvalues(p, pl.K).cwiseProduct(X);
  return (normal_form_C(p) * (dX + pl.lambda * pl.coeffs.jacobian(X) * dX)).real();
}

namespace {

double jacobian_F_inf_norm(const Vec3& u, const Vec2& w, const DerivedParams& p, double K) {
  const double u1 = u(0), u2 = u(1), u3 = u(2), v1 = w(0), v2 = w(1);
  const double at = p.alpha_t, h = p.h2_t, D = p.D21_t, D31 = p.D31, D32 = p.D32;
  const double rho = 1.0 / (1.0 - K * K);
  const double qr = rho * (-v2 * v2 * at * D32 * K - v1 * v1 * at * D31 * K + v1 * h - v1 * v2 * D);
  Mat3 J;
  J << -u3 * qr + at * D31 * u3 * u3, 0.0, -u1 * qr + h + 2 * at * D31 * u1 * u3,
       0.0, at * D32 * u3 * u3 - u3 * qr, 2 * at * D32 * u2 * u3 - u2 * qr,
       2 * u1 * qr - h - 2 * at * D31 * u1 * u3 + D * u2, 2 * u2 * qr - 2 * at * D32 * u2 * u3 + D * u1,
       -at * (D32 * u2 * u2 + D31 * u1 * u1);
  return J.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

Lemma2Thresholds lemma2_thresholds(const TransferPlan& pl, const DerivedParams& p, double rho_tr_plus,
                                   std::size_t samples) {
  Lemma2Thresholds out;
  double kw = 0.0;
  constexpr int grid = 2001;
  for (int k = 0; k < grid; ++k)
    kw = std::max(kw, approx_transfer_solution(pl.T_tr * k / (grid - 1), pl, p).norm());
  out.K_w = 1.0 + kw;
  double m = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = pl.T_tr * detail::radical_inverse(i + 1, 7);
    const Vec2 w = approx_transfer_solution(t, pl, p);
    m = std::max(m, jacobian_F_inf_norm(detail::halton_ball(i, 2.0, i % 3 == 0), w, p, pl.K));
  }
  out.M_tr = 1.0 + 1.25 * m;
  const double pi = std::numbers::pi;
  out.lambda_tr = pl.omega * pl.omega / (4 * pi * pi * out.K_w * out.M_tr);
  out.Theta = 0.5 * (4 * pi * out.M_tr * pl.lambda / pl.omega + pl.omega / (pi * out.K_w));
  out.rho_tr_plus = rho_tr_plus;
  out.rho_tr_minus = out.Theta * rho_tr_plus / (4 * (1 + out.Theta));
  return out;
}

TransferPlan plan_transfer(const DerivedParams& p, const Vec2& w0, double K, bool with_thresholds) {
  TransferPlan pl;
  pl.K = K;
  pl.lambda = p.lambda;
  pl.omega = K * std::sqrt(p.D32 * p.D31);
  pl.sigma = p.sigma;
  pl.rho = 1.0 / (1.0 - K * K);
  pl.w0 = w0;
  pl.coeffs = normal_form_coefficients(p, K);
  const NormalCoords X = initial_normal_coords(w0, pl.coeffs, p, K);
  pl.X_a = X.X_a;
  pl.X_b = X.X_b;
  const TransferTiming tt = transfer_time(w0, p, K);
  pl.A_m = tt.A_m;
  pl.phi = tt.phi;
  pl.T_tr = tt.T_tr;
  pl.lemma2 = with_thresholds ? lemma2_thresholds(pl, p, K / (8.0 * p.lambda)) : Lemma2Thresholds{};
  return pl;
}

ControlWaveform::ControlWaveform(std::shared_ptr<const TransferPlan> plan, const DerivedParams& p, double beta_e_t,
                                 double T_e)
    : plan_(std::move(plan)), p_(p), beta_e_t_(beta_e_t), T_e_(T_e), lambda_(p.lambda) {}

double ControlWaveform::transfer_beta_t(double t) const {
  const Vec2 w = approx_transfer_solution(time_scale_ * t, *plan_, p_);
  return beta_lat<double>(Vec3(w(0), w(1), -plan_->K), p_, plan_->K);
}

double ControlWaveform::beta_t(double t) const {
  if (t < -T_e_) return 0.0;
  if (t < 0.0) return beta_e_t_;
  if (t <= plan_->T_tr) return transfer_beta_t(t);
  return 0.0;
}

ControlWaveform ControlWaveform::with_expulsion_scale(double j) const {
  ControlWaveform c = *this;
  c.T_e_ = j * T_e_;
  return c;
}

ControlWaveform ControlWaveform::with_transfer_time_scale(double j) const {
  ControlWaveform c = *this;
  c.time_scale_ = j * time_scale_;
  return c;
}

ControlWaveform synthesize_control(const TransferPlan& plan, const ExpulsionPlan& expl, const DerivedParams& p) {
  constexpr int grid = 4001;
  for (int k = 0; k < grid; ++k) {
    const Vec2 w = approx_transfer_solution(plan.T_tr * k / (grid - 1), plan, p);
    if (w.squaredNorm() < 1e-6) throw PlanningError("transfer", "planned trajectory approaches a pole");
  }
  return ControlWaveform(std::make_shared<const TransferPlan>(plan), p, expl.beta_e / p.lambda, expl.T_e);
}

}  // namespace cql
