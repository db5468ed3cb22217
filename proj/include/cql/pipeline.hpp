#pragma once

#include "cql/attraction.hpp"
#include "cql/expulsion.hpp"
#include "cql/integrate.hpp"
#include "cql/params.hpp"
#include "cql/transfer.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace cql {

struct SwitchingPlans {
  DerivedParams params;
  ExpulsionPlan expulsion;
  TransferPlan transfer;
  ControlWaveform control;
  DiagnosticsList diagnostics;
};

// K and beta_e default to the values carried by the parameters.
SwitchingPlans plan_switching(const MaterialParams& raw, std::optional<double> K = {},
                              std::optional<double> beta_e = {}, bool with_thresholds = true);

struct RunOptions {
  IntegratorOptions integrator;
  double t_attract_max = 0.0;  // <= 0 selects 50 / (alpha_t lambda)
  double ringing_window = 300.0;
  int transfer_probe_points = 4001;
  bool attract = true;  // false stops the run at T_tr
};

struct SwitchingReport {
  std::string label;
  std::array<double, 3> stage_times{};  // (-T_e, 0, T_tr) or (0, T_on, T_on)
  std::array<Vec3, 3> u_at_stage_ends{};
  Vec3 u0 = Vec3::Zero();
  Vec3 final_state = Vec3::Zero();
  double t_final = 0.0;
  double dist_to_s_plus = 0.0;
  double psi_drift = 0.0;
  double psi_offset = 0.0;  // Psi(u0) - 1
  double max_u3_plus_K_during_transfer = 0.0;
  double r = 0.0;
  double f = 0.0;
  double success_radius = 0.0;
  double ringing_p2p = 0.0;
  double control_jump_at_zero = 0.0;
  bool converged = false;
  bool success = false;
  Trajectory trajectory;
};

inline constexpr double kZeroRadiusTolerance = 1e-6;

SwitchingReport run_switching(const Vec3& u0, const SwitchingPlans& plans, const RunOptions& opt = {});
SwitchingReport run_switching(const Vec3& u0, const SwitchingPlans& plans, const ControlWaveform& control,
                              const RunOptions& opt = {});

struct StressReports {
  SwitchingReport expulsion_scaled;  // T_e <- j T_e
  SwitchingReport transfer_scaled;   // beta_tr(t) <- beta_tr(j t)
};

StressReports stress_test(const SwitchingPlans& plans, const Vec3& u0, double j, const RunOptions& opt = {});

// Constant unscaled current beta_const on [0, T_on], then free relaxation.
SwitchingReport ballistic_baseline(const Vec3& u0, const DerivedParams& p, double beta_const, double T_on,
                                   const RunOptions& opt = {});

// Smallest T_on on the grid step, 2 step, ... <= T_max that ends closer to s^+ than to s^-.
// Candidates are evaluated in parallel batches.
std::optional<SwitchingReport> ballistic_search(const Vec3& u0, const DerivedParams& p, double beta_const,
                                                double step, double T_max, const RunOptions& opt = {});

// Initial condition s^- + offset, optionally projected onto the unit sphere.
Vec3 offset_start(const DerivedParams& p, const Vec3& offset, bool project = false);

// Caps worker threads at CQL_SWITCH_THREADS when set.
unsigned worker_threads();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cql
