#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace cql {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Vec2 = Vector2<double>;
using Mat3 = Matrix3<double>;
using Complex = std::complex<double>;
using CVec2 = Vector2<Complex>;
using CMat2 = Eigen::Matrix<Complex, 2, 2>;

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when the latitudinal control is evaluated at v1 = v2 = 0.
class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when sqrt(2) K > 1 or the transfer target cannot be reached.
class TargetError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class PlanningError : public std::runtime_error {
 public:
  PlanningError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, const Vec3& last)
      : std::runtime_error(what), t_(t), last_(last) {}
  double time() const { return t_; }
  const Vec3& last_state() const { return last_; }

 private:
  double t_;
  Vec3 last_;
};

class LyapunovViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cql
