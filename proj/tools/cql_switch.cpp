#include "cql/acceptance.hpp"
#include "cql/attraction.hpp"
#include "cql/figures.hpp"
#include "cql/pipeline.hpp"
#include "cql/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace cql;
using nlohmann::json;

namespace {

struct Common {
  std::string preset;
  std::string config;
  std::vector<std::string> sets;
  std::optional<double> lambda;
  std::optional<double> k_target;
  std::string out = "cql-out";
  double rtol = 1e-10;
  double atol = 1e-12;
  double dt_export = 0.1;
};

struct Start {
  std::vector<double> offset{0.0, 0.0, 0.0};
  bool offset_in_lambda = false;
  bool project = false;
};

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

MaterialParams material(const Common& c, const char* fallback) {
  const Figure fig = parse_figure(c.preset.empty() ? fallback : c.preset);
  std::vector<Setting> s;
  if (!c.config.empty()) s = load_config_file(c.config);
  for (const std::string& a : c.sets) s.push_back(parse_setting(a));
  if (c.lambda) s.emplace_back("lambda", num(*c.lambda));
  if (c.k_target) s.emplace_back("k_target", num(*c.k_target));
  return apply_settings(preset(fig), s);
}

IntegratorOptions integrator(const Common& c) {
  IntegratorOptions o;
  o.rtol = c.rtol;
  o.atol = c.atol;
  return o;
}

RunOptions run_options(const Common& c) {
  RunOptions o;
  o.integrator = integrator(c);
  return o;
}

std::filesystem::path out_dir(const Common& c) {
  std::filesystem::create_directories(c.out);
  return c.out;
}

void put_json(const std::filesystem::path& path, const json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
}

void put_table(const std::filesystem::path& path, const Table& t) {
  write_table_file(path.string(), t);
  std::cout << "wrote " << path.string() << "\n";
}

void put_rows(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  write_text_file(path.string(), os.str());
  std::cout << "wrote " << path.string() << "\n";
}

Vec3 start_state(const Start& s, const DerivedParams& p) {
  Vec3 off(s.offset[0], s.offset[1], s.offset[2]);
  if (s.offset_in_lambda) off *= p.lambda;
  return offset_start(p, off, s.project);
}

void add_start(CLI::App* app, Start& s) {
  app->add_option("--offset", s.offset, "initial offset from s^- (three components)")->expected(3);
  app->add_flag("--offset-lambda", s.offset_in_lambda, "offset is given in units of lambda");
  app->add_flag("--project", s.project, "project the initial state onto the unit sphere");
}

void summary(const SwitchingReport& r) {
  std::printf("%s: success %s, dist to s+ %.3e, success radius %.3e, Psi drift %.2e, t_final %.3f\n",
              r.label.c_str(), r.success ? "yes" : "no", r.dist_to_s_plus, r.success_radius, r.psi_drift, r.t_final);
}

int cmd_plan(const Common& c) {
  const SwitchingPlans plans = plan_switching(material(c, "fig6"));
  put_json(out_dir(c) / "plan.json", to_json(plans));
  std::printf("T_e %.6f, T_tr %.6f, A_m %.6f, w0 (%.6f, %.6f)\n", plans.expulsion.T_e, plans.transfer.T_tr,
              plans.transfer.A_m, plans.transfer.w0(0), plans.transfer.w0(1));
  for (const Diagnostic& d : plans.diagnostics)
    std::printf("  %s %s (margin %.3e)\n", d.pass ? "ok  " : "FAIL", d.name.c_str(), d.margin);
  return 0;
}

int cmd_expel(const Common& c, double rho_e) {
  const DerivedParams p = derive_params(material(c, "fig2"));
  const ExpulsionPlan plan = plan_expulsion(p, p.K, p.beta_e, rho_e, true);
  const auto dir = out_dir(c);
  put_json(dir / "expel.json", json{{"schema", kSchemaVersion}, {"params", to_json(p)}, {"expulsion", to_json(plan)}});
  put_table(dir / "expel.csv", expulsion_series(plan, p, c.dt_export, integrator(c)));
  std::printf("T_e %.6f, lambda_e %.3e, M_e %.4f\n", plan.T_e, plan.lemma1.lambda_e, plan.lemma1.M_e);
  return 0;
}

int cmd_transfer(const Common& c) {
  const SwitchingPlans plans = plan_switching(material(c, "fig6"));
  const auto dir = out_dir(c);
  put_json(dir / "transfer.json", json{{"schema", kSchemaVersion},
                                       {"params", to_json(plans.params)},
                                       {"transfer", to_json(plans.transfer)}});
  put_table(dir / "control.csv", control_series(plans.control, c.dt_export));
  std::printf("T_tr %.6f, A_m %.6f, phi %.6f, control jump at 0 %.4f\n", plans.transfer.T_tr, plans.transfer.A_m,
              plans.transfer.phi, plans.control.jump_at_zero());
  return 0;
}

int cmd_attract(const Common& c, double delta_a, int samples, bool check_range) {
  const DerivedParams p = derive_params(material(c, "fig4"));
  const auto pts = basin_boundary_points(samples, delta_a, p);
  std::vector<AttractionResult> res(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    res[k] = run_attraction(pts[k], p, 0.0, integrator(c), check_range);
  });
  const auto dir = out_dir(c);
  const Vec3 lim = predicted_limit(delta_a, p);
  json runs = json::array();
  double worst = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "attract_%02zu", k);
    put_rows(dir / (std::string(name) + ".csv"), attraction_rows(res[k].trajectory, p, c.dt_export));
    put_table(dir / (std::string(name) + "_W.csv"), lyapunov_series(res[k].W_series));
    const double err = (res[k].U_infinity - lim).norm();
    worst = std::max(worst, err);
    runs.push_back({{"U0", {pts[k](0), pts[k](1), pts[k](2)}},
                    {"U_infinity", {res[k].U_infinity(0), res[k].U_infinity(1), res[k].U_infinity(2)}},
                    {"converged", res[k].converged},
                    {"t_converged", res[k].t_converged},
                    {"max_W_increase", res[k].max_W_increase},
                    {"limit_error", err}});
  }
  const BasinSpec b = basin_spec(p);
  put_json(dir / "attract.json", json{{"schema", kSchemaVersion},
                                      {"params", to_json(p)},
                                      {"delta_a", delta_a},
                                      {"W_star", b.W_star},
                                      {"r_sm", b.r_sm},
                                      {"delta_a_max", b.delta_a_max},
                                      {"predicted_limit", {lim(0), lim(1), lim(2)}},
                                      {"runs", runs}});
  std::printf("%d boundary points, predicted limit U1 = %.6f, worst limit error %.3e\n", samples, lim(0), worst);
  return 0;
}

int cmd_switch(const Common& c, const Start& s, bool attract) {
  const SwitchingPlans plans = plan_switching(material(c, "fig6"));
  RunOptions o = run_options(c);
  o.attract = attract;
  SwitchingReport r = run_switching(start_state(s, plans.params), plans, o);
  r.label = "switch";
  const auto dir = out_dir(c);
  put_json(dir / "switch.json", to_json(r, false));
  put_rows(dir / "switch.csv", csv_rows(r.trajectory, c.dt_export));
  summary(r);
  return 0;
}

int cmd_stress(const Common& c, const Start& s, const std::vector<double>& js) {
  const SwitchingPlans plans = plan_switching(material(c, "fig7"));
  const Vec3 u0 = start_state(s, plans.params);
  const auto dir = out_dir(c);
  json all = json::array();
  for (double j : js) {
    const StressReports st = stress_test(plans, u0, j, run_options(c));
    for (const SwitchingReport* r : {&st.expulsion_scaled, &st.transfer_scaled}) {
      put_rows(dir / (r->label + "_" + num(j) + ".csv"), csv_rows(r->trajectory, c.dt_export));
      json rj = to_json(*r, false);
      rj["j"] = j;
      all.push_back(rj);
      std::printf("j = %g ", j);
      summary(*r);
    }
  }
  put_json(dir / "stress.json", json{{"schema", kSchemaVersion}, {"runs", all}});
  return 0;
}

int cmd_ballistic(const Common& c, const Start& s, double beta, std::optional<double> t_on, double step,
                  double t_max) {
  const DerivedParams p = derive_params(material(c, "fig5"));
  const Vec3 u0 = start_state(s, p);
  std::optional<SwitchingReport> r;
  if (t_on)
    r = ballistic_baseline(u0, p, beta, *t_on, run_options(c));
  else
    r = ballistic_search(u0, p, beta, step, t_max, run_options(c));
  if (!r) {
    std::printf("no switching pulse found up to T_on = %g\n", t_max);
    return 1;
  }
  r->label = "ballistic";
  const auto dir = out_dir(c);
  json j = to_json(*r, false);
  j["beta"] = beta;
  j["T_on"] = r->stage_times[1];
  put_json(dir / "ballistic.json", j);
  put_rows(dir / "ballistic.csv", csv_rows(r->trajectory, c.dt_export));
  std::printf("T_on %.3f, ringing peak-to-peak %.3e\n", r->stage_times[1], r->ringing_p2p);
  summary(*r);
  return 0;
}

int cmd_validate(const Common& c, const std::vector<int>& ids, bool figures) {
  const auto dir = out_dir(c);
  if (figures) {
    FigureOptions fo;
    fo.integrator = integrator(c);
    fo.dt_export = c.dt_export;
    for (Figure f : {Figure::FIG2, Figure::FIG3, Figure::FIG4, Figure::FIG5, Figure::FIG6, Figure::FIG7}) {
      const auto files = reproduce_figure(f, (dir / "figures").string(), fo);
      std::printf("%s: %zu files\n", figure_name(f).c_str(), files.size());
    }
  }
  AcceptanceOptions ao;
  ao.integrator = integrator(c);
  const auto results = run_acceptance(ids, ao);
  json out = json::array();
  int passed = 0;
  for (const CriterionResult& r : results) {
    std::cout << format_result(r) << "\n";
    passed += r.pass;
    out.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"measured", r.measured}, {"notes", r.notes}});
  }
  std::printf("%d of %zu criteria passed\n", passed, results.size());
  put_json(dir / "acceptance.json", json{{"schema", kSchemaVersion}, {"criteria", out}});
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Current-driven switching of a macrospin: planning, simulation and validation"};
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  app.add_option("--preset", c.preset, "parameter preset fig2..fig7");
  app.add_option("--config", c.config, "flat key=value parameter file");
  app.add_option("--set", c.sets, "override a parameter, key=value");
  app.add_option("--lambda", c.lambda, "perturbation parameter (moves D2 unless d2 is set)");
  app.add_option("--k-target", c.k_target, "target latitude K");
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--rtol", c.rtol, "integrator relative tolerance")->capture_default_str();
  app.add_option("--atol", c.atol, "integrator absolute tolerance")->capture_default_str();
  app.add_option("--dt-export", c.dt_export, "CSV sampling step")->capture_default_str()->check(CLI::PositiveNumber);

  auto* plan = app.add_subcommand("plan", "plan the three control stages");

  double rho_e = 1.0;
  auto* expel = app.add_subcommand("expel", "expulsion plan and linear approximation error");
  expel->add_option("--rho-e", rho_e, "Lemma 1 radius factor")->capture_default_str()->check(CLI::PositiveNumber);

  auto* transfer = app.add_subcommand("transfer", "transfer plan and control waveform");

  double delta_a = 0.1;
  int samples = 20;
  bool check_range = false;
  auto* attract = app.add_subcommand("attract", "relaxation from the basin boundary");
  attract->add_option("--delta-a", delta_a, "energy level offset")->capture_default_str();
  attract->add_option("--boundary-samples", samples, "number of boundary points")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  attract->add_flag("--check-range", check_range, "reject |delta_a| > (gamma/4)^2");

  Start sw_start;
  bool no_attract = false;
  auto* sw = app.add_subcommand("switch", "full three-stage switching run");
  add_start(sw, sw_start);
  sw->add_flag("--no-attract", no_attract, "stop at the end of the transfer");

  Start st_start;
  std::vector<double> js{0.98, 1.02};
  auto* stress = app.add_subcommand("stress", "time dilatation and contraction of the control");
  add_start(stress, st_start);
  stress->add_option("--j", js, "scale factors")->capture_default_str();

  Start ba_start;
  double beta = kCaptionBetaE, step = 0.5, t_max = 400.0;
  std::optional<double> t_on;
  auto* ballistic = app.add_subcommand("ballistic", "constant current pulse baseline");
  add_start(ballistic, ba_start);
  ballistic->add_option("--beta", beta, "constant current")->capture_default_str();
  ballistic->add_option("--t-on", t_on, "pulse length; searched when omitted");
  ballistic->add_option("--step", step, "search step")->capture_default_str()->check(CLI::PositiveNumber);
  ballistic->add_option("--t-max", t_max, "search limit")->capture_default_str();

  std::vector<int> ids;
  bool skip_figures = false;
  auto* validate = app.add_subcommand("validate", "figure reproduction and acceptance checks");
  validate->add_option("--criteria", ids, "criterion ids (all when omitted)")->check(CLI::Range(1, kCriteriaCount));
  validate->add_flag("--skip-figures", skip_figures, "only run the acceptance checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return cmd_plan(c);
    if (*expel) return cmd_expel(c, rho_e);
    if (*transfer) return cmd_transfer(c);
    if (*attract) return cmd_attract(c, delta_a, samples, check_range);
    if (*sw) return cmd_switch(c, sw_start, !no_attract);
    if (*stress) return cmd_stress(c, st_start, js);
    if (*ballistic) return cmd_ballistic(c, ba_start, beta, t_on, step, t_max);
    if (*validate) return cmd_validate(c, ids, !skip_figures);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
