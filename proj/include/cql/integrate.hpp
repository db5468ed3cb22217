#pragma once

#include "cql/types.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace cql {

enum class Stage { Expulsion, Transfer, Attraction, Free };
std::string stage_name(Stage s);

using Field = std::function<Vec3(double, const Vec3&)>;
using StopPredicate = std::function<bool(double, const Vec3&)>;

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;  // 0 selects an automatic initial step
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 20'000'000;
  bool renormalize = false;  // project back onto |u|^2 = Psi(u0) after every step
  Stage stage = Stage::Free;
  std::function<double(double)> beta;  // control sampled into the trajectory
};

// Fourth order continuous extension of one Dormand-Prince step.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  Vec3 r1, r2, r3, r4, r5;
  Vec3 operator()(double t) const;
};

class DenseOutput {
 public:
  void push(const DenseSegment& s) { segments_.push_back(s); }
  void append(const DenseOutput& other);
  bool empty() const { return segments_.empty(); }
  double t_begin() const { return segments_.front().t0; }
  double t_end() const { return segments_.back().t0 + segments_.back().h; }
  Vec3 operator()(double t) const;
  const std::vector<DenseSegment>& segments() const { return segments_; }

 private:
  std::vector<DenseSegment> segments_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec3> states;
  std::vector<double> beta_values;
  std::vector<Stage> stages;
  double psi_drift = 0.0;  // max |Psi(u) - Psi(u0)| over samples
  bool limit_reached = true;
  DenseOutput dense;

  std::size_t size() const { return times.size(); }
  const Vec3& back() const { return states.back(); }
  void push(double t, const Vec3& u, double beta, Stage stage);
  // Appends other, dropping its first sample when it repeats the last time.
  void append(const Trajectory& other);
};

// Dormand-Prince 5(4) stepper with PI step size control.
class Dopri5 {
 public:
  Dopri5(Field f, double t0, const Vec3& y0, IntegratorOptions opt = {});

  // Takes one accepted step without passing t_end. Returns false at t_end.
  bool step(double t_end);

  double t() const { return t_; }
  const Vec3& y() const { return y_; }
  const Vec3& dydt() const { return k1_; }
  const DenseSegment& last_segment() const { return seg_; }
  std::size_t accepted() const { return accepted_; }

 private:
  double initial_step() const;

  Field f_;
  IntegratorOptions opt_;
  double t_;
  Vec3 y_, k1_;
  double h_;
  double facold_ = 1e-4;
  bool last_rejected_ = false;
  std::size_t accepted_ = 0, total_ = 0;
  double norm2_;
  DenseSegment seg_;
};

Trajectory integrate(const Field& field, const Vec3& u0, double t0, double t1, const IntegratorOptions& opt = {});

// Stops at the first time the predicate holds, located by bisection on the
// dense output to 1e-10 in time, or at t_max with limit_reached = false.
Trajectory integrate_until(const Field& field, const Vec3& u0, const StopPredicate& stop, double t_max,
                           const IntegratorOptions& opt = {}, double t0 = 0.0);

// Samples the dense output on a uniform grid, always including both ends.
std::vector<double> uniform_grid(double t0, double t1, double dt);

}  // namespace cql
