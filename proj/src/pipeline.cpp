#include "cql/pipeline.hpp"

#include "cql/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cql {

SwitchingPlans plan_switching(const MaterialParams& raw, std::optional<double> K, std::optional<double> beta_e,
                              bool with_thresholds) {
  MaterialParams m = raw;
  if (K) m.K = *K;
  if (beta_e) m.beta_e = *beta_e;
  const DerivedParams p = derive_params(m);
  DiagnosticsList diag = validate_admissibility(p);
  ExpulsionPlan ex;
  try {
    ex = plan_expulsion(p, p.K, p.beta_e, 1.0, with_thresholds);
  } catch (const std::exception& e) {
    throw PlanningError("expulsion", e.what());
  }
  TransferPlan tr;
  try {
    tr = plan_transfer(p, ex.u_end.head<2>(), p.K, with_thresholds);
  } catch (const PlanningError&) {
    throw;
  } catch (const std::exception& e) {
    throw PlanningError("transfer", e.what());
  }
  ControlWaveform control = synthesize_control(tr, ex, p);
  return SwitchingPlans{p, ex, tr, control, std::move(diag)};
}

Vec3 offset_start(const DerivedParams& p, const Vec3& offset, bool project) {
  Vec3 u = p.s_minus + offset;
  if (project) u.normalize();
  return u;
}

namespace {

struct Relaxation {
  Trajectory trajectory;
  bool converged;
};

Relaxation relax(const Vec3& u, double t0, const DerivedParams& p, double t_max, IntegratorOptions opt) {
  if (t_max <= 0.0) t_max = default_attraction_horizon(p);
  opt.stage = Stage::Attraction;
  const Field field = [&p](double, const Vec3& x) { return scaled_rhs<double>(x, 0.0, p); };
  Relaxation out;
  Trajectory& tr = out.trajectory;
  const double psi0 = u.squaredNorm();
  tr.push(t0, u, 0.0, Stage::Attraction);
  int below = field(t0, u).norm() < kConvergedField ? 1 : 0;
  Dopri5 s(field, t0, u, opt);
  while (below < 3 && s.step(t0 + t_max)) {
    tr.dense.push(s.last_segment());
    tr.push(s.t(), s.y(), 0.0, Stage::Attraction);
    tr.psi_drift = std::max(tr.psi_drift, std::abs(s.y().squaredNorm() - psi0));
    below = s.dydt().norm() < kConvergedField ? below + 1 : 0;
  }
  out.converged = below >= 3;
  tr.limit_reached = out.converged;
  return out;
}

double peak_to_peak_u1(const Trajectory& tr, double t0, double t1) {
  if (tr.dense.empty()) return 0.0;
  t1 = std::min(t1, tr.dense.t_end());
  double lo = INFINITY, hi = -INFINITY;
  for (double t : uniform_grid(t0, std::max(t0, t1), 0.05)) {
    const double u1 = tr.dense(t)(0);
    lo = std::min(lo, u1);
    hi = std::max(hi, u1);
  }
  return hi - lo;
}

void finish(SwitchingReport& rep, const DerivedParams& p, double t_off, const RunOptions& opt) {
  const Trajectory& tr = rep.trajectory;
  rep.final_state = tr.back();
  rep.t_final = tr.times.back();
  rep.dist_to_s_plus = (rep.final_state - p.s_plus).norm();
  rep.r = (rep.u0 - p.s_minus).norm();
  rep.f = 1.0 / (2.0 * p.gamma);
  rep.success_radius = rep.r > 0.0 ? rep.f * rep.r : kZeroRadiusTolerance;
  rep.success = rep.dist_to_s_plus <= rep.success_radius;
  rep.psi_offset = rep.u0.squaredNorm() - 1.0;
  // Drift is measured against Psi(u0) across all stages.
  double drift = 0.0;
  for (const Vec3& u : tr.states) drift = std::max(drift, std::abs(u.squaredNorm() - rep.u0.squaredNorm()));
  rep.psi_drift = drift;
  rep.ringing_p2p = peak_to_peak_u1(tr, t_off, t_off + opt.ringing_window);
}

}  // namespace

SwitchingReport run_switching(const Vec3& u0, const SwitchingPlans& plans, const RunOptions& opt) {
  return run_switching(u0, plans, plans.control, opt);
}

SwitchingReport run_switching(const Vec3& u0, const SwitchingPlans& plans, const ControlWaveform& control,
                              const RunOptions& opt) {
  const DerivedParams& p = plans.params;
  const double T_e = control.T_e(), T_tr = control.T_tr(), K = plans.transfer.K;
  SwitchingReport rep;
  rep.label = "cql";
  rep.u0 = u0;
  rep.stage_times = {-T_e, 0.0, T_tr};
  rep.control_jump_at_zero = control.jump_at_zero();

  IntegratorOptions io = opt.integrator;
  io.stage = Stage::Expulsion;
  const double be_t = control.beta_e_t();
  io.beta = [&](double) { return p.lambda * be_t; };
  Trajectory tr =
      integrate([&](double, const Vec3& u) { return scaled_rhs<double>(u, be_t, p); }, u0, -T_e, 0.0, io);
  rep.u_at_stage_ends[0] = tr.back();

  io.stage = Stage::Transfer;
  io.beta = [&](double t) { return control.beta(t); };
  Trajectory tt = integrate(
      [&](double t, const Vec3& u) { return scaled_rhs<double>(u, control.transfer_beta_t(t), p); }, tr.back(), 0.0,
      T_tr, io);
  rep.u_at_stage_ends[1] = tt.back();
  double m = 0.0;
  for (double t : uniform_grid(0.0, T_tr, T_tr / (opt.transfer_probe_points - 1)))
    m = std::max(m, std::abs(tt.dense(t)(2) + K));
  for (const Vec3& u : tt.states) m = std::max(m, std::abs(u(2) + K));
  rep.max_u3_plus_K_during_transfer = m;
  tr.append(tt);

  if (opt.attract) {
    Relaxation rx = relax(tr.back(), T_tr, p, opt.t_attract_max, opt.integrator);
    rep.converged = rx.converged;
    tr.append(rx.trajectory);
    tr.limit_reached = rx.converged;
  }
  rep.u_at_stage_ends[2] = tr.back();
  rep.trajectory = std::move(tr);
  finish(rep, p, T_tr, opt);
  return rep;
}

StressReports stress_test(const SwitchingPlans& plans, const Vec3& u0, double j, const RunOptions& opt) {
  StressReports out;
  std::vector<SwitchingReport*> slots = {&out.expulsion_scaled, &out.transfer_scaled};
  parallel_for(2, [&](std::size_t k) {
    const ControlWaveform c = k == 0 ? plans.control.with_expulsion_scale(j) : plans.control.with_transfer_time_scale(j);
    *slots[k] = run_switching(u0, plans, c, opt);
    slots[k]->label = k == 0 ? "stress_expulsion" : "stress_transfer";
  });
  return out;
}

SwitchingReport ballistic_baseline(const Vec3& u0, const DerivedParams& p, double beta_const, double T_on,
                                   const RunOptions& opt) {
  SwitchingReport rep;
  rep.label = "ballistic";
  rep.u0 = u0;
  rep.stage_times = {0.0, T_on, T_on};
  Trajectory tr;
  if (T_on > 0.0) {
    IntegratorOptions io = opt.integrator;
    io.stage = Stage::Expulsion;
    io.beta = [&](double) { return beta_const; };
    const double bt = beta_const / p.lambda;
    tr = integrate([&](double, const Vec3& u) { return scaled_rhs<double>(u, bt, p); }, u0, 0.0, T_on, io);
  } else {
    tr.push(0.0, u0, 0.0, Stage::Attraction);
  }
  rep.u_at_stage_ends[0] = tr.back();
  rep.u_at_stage_ends[1] = tr.back();
  Relaxation rx = relax(tr.back(), T_on, p, opt.t_attract_max, opt.integrator);
  rep.u_at_stage_ends[2] = rx.trajectory.back();
  rep.converged = rx.converged;
  tr.append(rx.trajectory);
  tr.limit_reached = rx.converged;
  rep.trajectory = std::move(tr);
  finish(rep, p, T_on, opt);
  return rep;
}

std::optional<SwitchingReport> ballistic_search(const Vec3& u0, const DerivedParams& p, double beta_const,
                                                double step, double T_max, const RunOptions& opt) {
  const auto n = static_cast<std::size_t>(std::floor(T_max / step + 1e-9));
  const std::size_t batch = worker_threads();
  for (std::size_t first = 1; first <= n; first += batch) {
    const std::size_t count = std::min(batch, n + 1 - first);
    std::vector<std::optional<SwitchingReport>> found(count);
    parallel_for(count, [&](std::size_t k) {
      SwitchingReport rep = ballistic_baseline(u0, p, beta_const, static_cast<double>(first + k) * step, opt);
      if ((rep.final_state - p.s_plus).norm() < (rep.final_state - p.s_minus).norm()) found[k] = std::move(rep);
    });
    for (auto& f : found)
      if (f) return f;
  }
  return std::nullopt;
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CQL_SWITCH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(worker_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cql
