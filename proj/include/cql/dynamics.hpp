#pragma once

#include "cql/params.hpp"
#include "cql/types.hpp"

#include <type_traits>

namespace cql {

template <typename T>
using Same = std::type_identity_t<T>;

template <typename Scalar>
Scalar psi(const Vector3<Scalar>& u) {
  return u.squaredNorm();
}

template <typename Scalar>
Vector3<Scalar> effective_field(const Vector3<Scalar>& m, const Vector3<Same<Scalar>>& h_a,
                                const DerivedParams& p) {
  return Vector3<Scalar>(-p.D1 * m(0), -p.D2 * m(1), -p.D3 * m(2)) + h_a;
}

// g_L = (D1 m1^2 + D2 m2^2 + D3 m3^2)/2 - h_a . m
template <typename Scalar>
Scalar free_energy(const Vector3<Scalar>& m, const Vector3<Same<Scalar>>& h_a, const DerivedParams& p) {
  return Scalar(0.5) * (p.D1 * m(0) * m(0) + p.D2 * m(1) * m(1) + p.D3 * m(2) * m(2)) - h_a.dot(m);
}

template <typename Scalar>
Vector3<Scalar> lls_rhs(const Vector3<Scalar>& m, const Vector3<Same<Scalar>>& h_a, Same<Scalar> alpha,
                        Same<Scalar> beta, const Vector3<Same<Scalar>>& e_p, const DerivedParams& p) {
  const Vector3<Scalar> h = effective_field<Scalar>(m, h_a, p);
  const Vector3<Scalar> mxh = m.cross(h);
  return -mxh - alpha * m.cross(mxh) + beta * m.cross(m.cross(e_p));
}

// Reduced system: h_a = (0, h2, 0), e_p = e3, unscaled constants.
template <typename Scalar>
Vector3<Scalar> reduced_rhs(const Vector3<Scalar>& u, Same<Scalar> beta, const DerivedParams& p) {
  const Scalar u1 = u(0), u2 = u(1), u3 = u(2);
  const double a = p.alpha, h = p.h2;
  return Vector3<Scalar>(
      p.D32 * u2 * u3 + h * u3 + beta * u1 * u3 + a * p.D31 * u1 * u3 * u3 + a * u1 * u2 * (p.D21 * u2 - h),
      -p.D31 * u1 * u3 + beta * u2 * u3 + a * p.D32 * u2 * u3 * u3 +
          a * (h * (u1 * u1 + u3 * u3) - p.D21 * u1 * u1 * u2),
      -h * u1 + p.D21 * u1 * u2 - (u1 * u1 + u2 * u2) * beta - a * u3 * (p.D32 * u2 * u2 + p.D31 * u1 * u1) -
          a * h * u2 * u3);
}

// Scaled system in (h2_t, alpha_t, D21_t, beta_t) with explicit powers of lambda.
template <typename Scalar>
Vector3<Scalar> scaled_rhs(const Vector3<Scalar>& u, Same<Scalar> beta_t, const DerivedParams& p) {
  const Scalar u1 = u(0), u2 = u(1), u3 = u(2);
  const double l = p.lambda, at = p.alpha_t, h = p.h2_t, D = p.D21_t;
  return Vector3<Scalar>(
      p.D32 * u2 * u3 + l * (h * u3 + u1 * u3 * beta_t + at * u1 * p.D31 * u3 * u3) +
          at * l * l * u1 * u2 * (D * u2 - h),
      -p.D31 * u1 * u3 + l * u2 * u3 * (beta_t + at * p.D32 * u3) +
          at * l * l * (h * (u1 * u1 + u3 * u3) - D * u1 * u1 * u2),
      l * (-h * u1 + u1 * u2 * D - (u1 * u1 + u2 * u2) * beta_t - at * u3 * (p.D32 * u2 * u2 + p.D31 * u1 * u1)) -
          at * h * l * l * u2 * u3);
}

// A(u3) of the zeroth order field.
inline Mat3 linear_part(double u3, const DerivedParams& p) {
  Mat3 A = Mat3::Zero();
  A(0, 1) = p.D32 * u3;
  A(1, 0) = -p.D31 * u3;
  return A;
}

template <typename Scalar>
Scalar beta_lat(const Vector3<Scalar>& v, const DerivedParams& p, double K) {
  using std::abs;
  const Scalar v1 = v(0), v2 = v(1);
  const Scalar r2 = v1 * v1 + v2 * v2;
  if (abs(r2) == 0.0) throw PoleError("beta_lat evaluated at a pole (v1 = v2 = 0)");
  const double at = p.alpha_t, h = p.h2_t;
  return (v1 * v2 * p.D21_t + at * K * (p.D32 * v2 * v2 + p.D31 * v1 * v1) + at * h * p.lambda * v2 * K -
          h * v1) /
         r2;
}

// Scaled field closed by beta_lat(v). The third component vanishes on v3 = -K.
template <typename Scalar>
Vector3<Scalar> latitudinal_rhs(const Vector3<Scalar>& v, const DerivedParams& p, double K) {
  return scaled_rhs<Scalar>(v, beta_lat<Scalar>(v, p, K), p);
}

struct FRFields {
  Vec3 F;
  Vec3 R;
};

// First and second order parts of scaled_rhs(u, beta_lat(v)) - A(u3) u,
// valid for v1^2 + v2^2 = 1 - K^2.
inline FRFields fr_fields(const Vec3& u, const Vec3& v, const DerivedParams& p, double K) {
  const double u1 = u(0), u2 = u(1), u3 = u(2);
  const double v1 = v(0), v2 = v(1);
  const double at = p.alpha_t, h = p.h2_t, D = p.D21_t, D31 = p.D31, D32 = p.D32;
  const double rho = 1.0 / (1.0 - K * K);
  const double q = -v2 * v2 * at * D32 * K - v1 * v1 * at * D31 * K + v1 * h - v1 * v2 * D;
  FRFields out;
  out.F(0) = -u1 * u3 * q * rho + u3 * h + u1 * u3 * u3 * at * D31;
  out.F(1) = u2 * u3 * u3 * at * D32 - u2 * u3 * q * rho;
  out.F(2) = (u2 * u2 + u1 * u1) * q * rho - u1 * h + at * (-u2 * u2 * u3 * D32 - u1 * u1 * u3 * D31) + u1 * u2 * D;
  out.R(0) = u1 * v2 * u3 * at * h * K * rho + at * (u1 * u2 * u2 * D - u1 * u2 * h);
  out.R(1) = u2 * v2 * u3 * at * h * K * rho + at * (u3 * u3 * h + u1 * u1 * h - u1 * u1 * u2 * D);
  out.R(2) = -(u2 * u2 + u1 * u1) * v2 * at * h * K * rho - u2 * u3 * at * h;
  return out;
}

// Reduced form of fr_fields(v, v) on the latitude v3 = -K, |(v1, v2)|^2 = 1/rho.
// Some alpha_t terms sit one order higher than in fr_fields(v, v), so only
// lambda F + lambda^2 R agrees between the two.
inline FRFields latitude_fields(const Vec2& v, const DerivedParams& p, double K) {
  const double v1 = v(0), v2 = v(1);
  const double at = p.alpha_t, h = p.h2_t, D = p.D21_t;
  const double rho = 1.0 / (1.0 - K * K);
  FRFields out;
  out.F(0) = -rho * K * v2 * (h * v2 + D * v1 * v1);
  out.F(1) = rho * K * v1 * (h * v2 - D * v2 * v2);
  out.F(2) = 0.0;
  out.R(0) = rho * at * v1 * v2 * (K * K * D * v2 + v1 * v1 * (v2 * D - h) - h * (K * K + v2 * v2) + D * v2 * v2 * v2);
  out.R(1) = rho * at * v1 * v1 * (-K * K * D * v2 - v1 * v1 * (v2 * D - h) + h * (K * K + v2 * v2) - D * v2 * v2 * v2);
  out.R(2) = 0.0;
  return out;
}

}  // namespace cql
