#include "cql/figures.hpp"

#include "cql/attraction.hpp"
#include "cql/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace cql {

namespace {

std::string tag(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

MaterialParams at_lambda(Figure fig, double lambda) {
  return apply_settings(preset(fig), {{"lambda", tag(lambda)}});
}

std::string put_rows(const std::filesystem::path& dir, const std::string& name, const std::vector<CsvRow>& rows) {
  const std::filesystem::path path = dir / name;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  write_csv(os, rows);
  if (!os) throw std::runtime_error("write failed for " + path.string());
  return path.string();
}

std::string put_trajectory(const std::filesystem::path& dir, const std::string& name, const Trajectory& tr,
                           double dt) {
  return put_rows(dir, name, csv_rows(tr, dt));
}

std::string put_table(const std::filesystem::path& dir, const std::string& name, const Table& t) {
  const std::filesystem::path path = dir / name;
  write_table_file(path.string(), t);
  return path.string();
}

RunOptions run_options(const FigureOptions& opt, bool attract = true) {
  RunOptions ro;
  ro.integrator = opt.integrator;
  ro.attract = attract;
  return ro;
}

}  // namespace

void write_table(std::ostream& os, const Table& table) {
  for (std::size_t k = 0; k < table.header.size(); ++k) os << (k ? "," : "") << table.header[k];
  os << '\n';
  char buf[40];
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      os << (k ? "," : "") << buf;
    }
    os << '\n';
  }
}

void write_table_file(const std::string& path, const Table& table) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_table(os, table);
  if (!os) throw std::runtime_error("write failed for " + path);
}

Table expulsion_series(const ExpulsionPlan& plan, const DerivedParams& p, double dt, const IntegratorOptions& opt) {
  const Trajectory tr = integrate([&](double, const Vec3& xi) { return translated_field(xi, p, plan.beta_e); },
                                  Vec3::Zero(), 0.0, plan.T_e, opt);
  Table t{{"tau", "xi1", "xi2", "xi3", "xip1", "xip2", "xip3", "delta"}, {}};
  for (double tau : uniform_grid(0.0, plan.T_e, dt)) {
    const Vec3 xi = tr.dense(tau), xp = approx_expulsion(tau, plan, p.lambda);
    t.rows.push_back({tau, xi(0), xi(1), xi(2), xp(0), xp(1), xp(2), (xi - xp).norm()});
  }
  return t;
}

Table control_series(const ControlWaveform& control, double dt) {
  Table t{{"t", "beta_t", "beta"}, {}};
  for (double s : uniform_grid(-control.T_e(), control.T_tr(), dt)) t.rows.push_back({s, control.beta_t(s), control.beta(s)});
  return t;
}

std::vector<CsvRow> attraction_rows(const Trajectory& tr, const DerivedParams& p, double dt) {
  std::vector<CsvRow> rows = csv_rows(tr, dt);
  for (CsvRow& r : rows) r.u += p.s_plus;
  return rows;
}

Table lyapunov_series(const std::vector<std::pair<double, double>>& W) {
  Table t{{"t", "W"}, {}};
  for (const auto& [s, w] : W) t.rows.push_back({s, w});
  return t;
}

std::vector<std::string> reproduce_figure(Figure fig, const std::string& dir_name, const FigureOptions& opt) {
  const std::filesystem::path dir = std::filesystem::path(dir_name) / figure_name(fig);
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  const double dt = opt.dt_export;

  switch (fig) {
    case Figure::FIG2:
      for (double lam : {0.006, 0.004, 0.001}) {
        MaterialParams m = at_lambda(Figure::FIG2, lam);
        m.beta_e = kCaptionBetaE;
        const DerivedParams p = derive_params(m);
        const ExpulsionPlan plan = plan_expulsion(p, p.K, p.beta_e, 1.0, false);
        files.push_back(put_table(dir, "expulsion_lambda_" + tag(lam) + ".csv",
                                  expulsion_series(plan, p, dt / 10, opt.integrator)));
      }
      break;
    case Figure::FIG3:
      for (double lam : {0.0055, 0.005, 0.001, 0.0005}) {
        const SwitchingPlans plans = plan_switching(at_lambda(Figure::FIG3, lam));
        const Vec3 u0 = offset_start(plans.params, lam * Vec3(-0.1, 0.05, 0.0));
        const SwitchingReport r = run_switching(u0, plans, run_options(opt, false));
        files.push_back(put_trajectory(dir, "transfer_lambda_" + tag(lam) + ".csv", r.trajectory, dt));
        files.push_back(put_table(dir, "control_lambda_" + tag(lam) + ".csv", control_series(plans.control, dt)));
      }
      break;
    case Figure::FIG4: {
      const DerivedParams p = derive_params(preset(Figure::FIG4));
      for (double da : {0.0, 0.1}) {
        const auto pts = basin_boundary_points(20, da, p);
        std::vector<AttractionResult> res(pts.size());
        parallel_for(pts.size(), [&](std::size_t k) { res[k] = run_attraction(pts[k], p, 0.0, opt.integrator); });
        for (std::size_t k = 0; k < pts.size(); ++k) {
          std::vector<CsvRow> rows = attraction_rows(res[k].trajectory, p, dt * 100);
          char name[64];
          std::snprintf(name, sizeof name, "delta_%s_point_%02zu", tag(da).c_str(), k);
          files.push_back(put_rows(dir, std::string(name) + ".csv", rows));
          files.push_back(put_table(dir, std::string(name) + "_W.csv", lyapunov_series(res[k].W_series)));
        }
      }
      break;
    }
    case Figure::FIG5: {
      const double lam = kCaptionLambdaFig6;
      const SwitchingPlans plans = plan_switching(at_lambda(Figure::FIG5, lam));
      const Vec3 u0 = offset_start(plans.params, Vec3(lam, 0.0, 0.0));
      const SwitchingReport cq = run_switching(u0, plans, run_options(opt));
      files.push_back(put_trajectory(dir, "cql.csv", cq.trajectory, dt));
      const auto bal = ballistic_search(u0, plans.params, kCaptionBetaE, 0.5, 400.0, run_options(opt));
      if (bal) files.push_back(put_trajectory(dir, "ballistic.csv", bal->trajectory, dt));
      break;
    }
    case Figure::FIG6: {
      const double lam = kCaptionLambdaFig6;
      const SwitchingPlans plans = plan_switching(at_lambda(Figure::FIG6, lam));
      const Vec3 u0 = offset_start(plans.params, lam * Vec3(-0.1, 0.05, 0.0));
      const SwitchingReport r = run_switching(u0, plans, run_options(opt));
      files.push_back(put_trajectory(dir, "switch.csv", r.trajectory, dt));
      files.push_back(put_table(dir, "control.csv", control_series(plans.control, dt)));
      break;
    }
    case Figure::FIG7: {
      const double lam = kCaptionLambdaFig6;
      const SwitchingPlans plans = plan_switching(at_lambda(Figure::FIG7, lam));
      const Vec3 u0 = offset_start(plans.params, lam * Vec3(-0.1, 0.05, 0.0), true);
      for (double j : {0.98, 1.02}) {
        const StressReports s = stress_test(plans, u0, j, run_options(opt));
        files.push_back(put_trajectory(dir, "expulsion_scaled_" + tag(j) + ".csv", s.expulsion_scaled.trajectory, dt));
        files.push_back(put_trajectory(dir, "transfer_scaled_" + tag(j) + ".csv", s.transfer_scaled.trajectory, dt));
      }
      break;
    }
  }
  return files;
}

}  // namespace cql
