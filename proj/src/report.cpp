#include "cql/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cql {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }
json vec(const Vec2& v) { return json::array({v(0), v(1)}); }
Vec3 vec3(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

json mat(const Mat3& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(vec(Vec3(m.row(i).transpose())));
  return rows;
}

json complex_value(const Complex& c) { return json::array({c.real(), c.imag()}); }

Stage parse_stage(const std::string& s) {
  for (Stage st : {Stage::Expulsion, Stage::Transfer, Stage::Attraction, Stage::Free})
    if (stage_name(st) == s) return st;
  throw std::invalid_argument("unknown stage " + s);
}

}  // namespace

json to_json(const DerivedParams& p) {
  return json{{"D1", p.D1},
              {"D2", p.D2},
              {"D3", p.D3},
              {"D21", p.D21},
              {"D31", p.D31},
              {"D32", p.D32},
              {"lambda", p.lambda},
              {"alpha_t", p.alpha_t},
              {"alpha", p.alpha},
              {"h2_t", p.h2_t},
              {"h2", p.h2},
              {"Omega", p.Omega},
              {"gamma", p.gamma},
              {"sigma", p.sigma},
              {"omega", p.omega},
              {"rho", p.rho},
              {"K", p.K},
              {"beta_e", p.beta_e},
              {"beta_e_t", p.beta_e_t},
              {"s_minus", vec(p.s_minus)},
              {"s_plus", vec(p.s_plus)}};
}

json to_json(const ExpulsionPlan& plan) {
  const Lemma1Thresholds& l = plan.lemma1;
  return json{{"beta_e", plan.beta_e},
              {"T_e", plan.T_e},
              {"a_bar", plan.a_bar},
              {"b_bar", plan.b_bar},
              {"L", mat(plan.L)},
              {"f", vec(plan.f)},
              {"xi_end", vec(plan.xi_end)},
              {"u_end", vec(plan.u_end)},
              {"lemma1",
               {{"r_star", l.r_star},
                {"M1", l.M1},
                {"M2", l.M2},
                {"M_e", l.M_e},
                {"lambda_e", l.lambda_e},
                {"rho_e", l.rho_e}}}};
}

json to_json(const TransferPlan& plan) {
  json coeffs = json::array();
  for (int j = 0; j < 2; ++j) {
    json comp = json::array();
    for (std::size_t k = 0; k < kNormalFormMonomials.size(); ++k) {
      const Monomial m = kNormalFormMonomials[k];
      comp.push_back({{"a", m.a}, {"b", m.b}, {"c", complex_value(plan.coeffs.c[j][k])}});
    }
    coeffs.push_back(comp);
  }
  const Lemma2Thresholds& l = plan.lemma2;
  return json{{"K", plan.K},
              {"lambda", plan.lambda},
              {"omega", plan.omega},
              {"sigma", plan.sigma},
              {"rho", plan.rho},
              {"w0", vec(plan.w0)},
              {"X_a", plan.X_a},
              {"X_b", plan.X_b},
              {"A_m", plan.A_m},
              {"phi", plan.phi},
              {"T_tr", plan.T_tr},
              {"coefficients", coeffs},
              {"lemma2",
               {{"M_tr", l.M_tr},
                {"K_w", l.K_w},
                {"lambda_tr", l.lambda_tr},
                {"Theta", l.Theta},
                {"rho_tr_plus", l.rho_tr_plus},
                {"rho_tr_minus", l.rho_tr_minus}}}};
}

json to_json(const DiagnosticsList& diagnostics) {
  json out = json::array();
  for (const Diagnostic& d : diagnostics)
    out.push_back({{"name", d.name}, {"pass", d.pass}, {"margin", d.margin}, {"detail", d.detail}});
  return out;
}

json to_json(const SwitchingPlans& plans) {
  return json{{"schema", kSchemaVersion},
              {"params", to_json(plans.params)},
              {"admissibility", to_json(plans.diagnostics)},
              {"expulsion", to_json(plans.expulsion)},
              {"transfer", to_json(plans.transfer)},
              {"control",
               {{"T_e", plans.control.T_e()},
                {"T_tr", plans.control.T_tr()},
                {"beta_e_t", plans.control.beta_e_t()},
                {"jump_at_zero", plans.control.jump_at_zero()}}}};
}

json to_json(const SwitchingReport& r, bool with_trajectory) {
  json j{{"schema", kSchemaVersion},
         {"label", r.label},
         {"stage_times", r.stage_times},
         {"u_at_stage_ends", {vec(r.u_at_stage_ends[0]), vec(r.u_at_stage_ends[1]), vec(r.u_at_stage_ends[2])}},
         {"u0", vec(r.u0)},
         {"final_state", vec(r.final_state)},
         {"t_final", r.t_final},
         {"dist_to_s_plus", r.dist_to_s_plus},
         {"psi_drift", r.psi_drift},
         {"psi_offset", r.psi_offset},
         {"max_u3_plus_K_during_transfer", r.max_u3_plus_K_during_transfer},
         {"r", r.r},
         {"f", r.f},
         {"success_radius", r.success_radius},
         {"ringing_p2p", r.ringing_p2p},
         {"control_jump_at_zero", r.control_jump_at_zero},
         {"converged", r.converged},
         {"success", r.success}};
  if (with_trajectory) {
    const Trajectory& tr = r.trajectory;
    json states = json::array(), stages = json::array();
    for (const Vec3& u : tr.states) states.push_back(vec(u));
    for (Stage s : tr.stages) stages.push_back(stage_name(s));
    j["trajectory"] = {{"t", tr.times},
                       {"u", states},
                       {"beta", tr.beta_values},
                       {"stage", stages},
                       {"psi_drift", tr.psi_drift},
                       {"limit_reached", tr.limit_reached}};
  }
  return j;
}

SwitchingReport report_from_json(const json& j) {
  if (j.at("schema").get<std::string>() != kSchemaVersion)
    throw std::invalid_argument("unsupported schema " + j.at("schema").get<std::string>());
  SwitchingReport r;
  r.label = j.at("label").get<std::string>();
  r.stage_times = j.at("stage_times").get<std::array<double, 3>>();
  for (int k = 0; k < 3; ++k) r.u_at_stage_ends[k] = vec3(j.at("u_at_stage_ends").at(k));
  r.u0 = vec3(j.at("u0"));
  r.final_state = vec3(j.at("final_state"));
  r.t_final = j.at("t_final").get<double>();
  r.dist_to_s_plus = j.at("dist_to_s_plus").get<double>();
  r.psi_drift = j.at("psi_drift").get<double>();
  r.psi_offset = j.at("psi_offset").get<double>();
  r.max_u3_plus_K_during_transfer = j.at("max_u3_plus_K_during_transfer").get<double>();
  r.r = j.at("r").get<double>();
  r.f = j.at("f").get<double>();
  r.success_radius = j.at("success_radius").get<double>();
  r.ringing_p2p = j.at("ringing_p2p").get<double>();
  r.control_jump_at_zero = j.at("control_jump_at_zero").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.success = j.at("success").get<bool>();
  if (j.contains("trajectory")) {
    const json& t = j.at("trajectory");
    const auto times = t.at("t").get<std::vector<double>>();
    const auto betas = t.at("beta").get<std::vector<double>>();
    for (std::size_t i = 0; i < times.size(); ++i)
      r.trajectory.push(times[i], vec3(t.at("u").at(i)), betas[i], parse_stage(t.at("stage").at(i).get<std::string>()));
    r.trajectory.psi_drift = t.at("psi_drift").get<double>();
    r.trajectory.limit_reached = t.at("limit_reached").get<bool>();
  }
  return r;
}

std::vector<CsvRow> csv_rows(const Trajectory& tr, double dt, const std::function<double(double)>& beta) {
  std::vector<CsvRow> rows;
  if (tr.size() == 0) return rows;
  if (dt <= 0.0 || tr.dense.empty()) {
    rows.reserve(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i)
      rows.push_back({tr.times[i], tr.states[i], beta ? beta(tr.times[i]) : tr.beta_values[i], tr.stages[i]});
    return rows;
  }
  std::size_t i = 0;
  for (double t : uniform_grid(tr.times.front(), tr.times.back(), dt)) {
    while (i + 1 < tr.size() && tr.times[i + 1] <= t) ++i;
    rows.push_back({t, tr.dense(t), beta ? beta(t) : tr.beta_values[i], tr.stages[i]});
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << "t,u1,u2,u3,beta,stage\n";
  os << std::setprecision(17);
  for (const CsvRow& r : rows)
    os << r.t << ',' << r.u(0) << ',' << r.u(1) << ',' << r.u(2) << ',' << r.beta << ',' << stage_name(r.stage)
       << '\n';
}

std::vector<CsvRow> read_csv(std::istream& is) {
  std::vector<CsvRow> rows;
  std::string line;
  if (!std::getline(is, line) || line != "t,u1,u2,u3,beta,stage") throw std::invalid_argument("bad CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[6];
    for (auto& c : cell) std::getline(ss, c, ',');
    rows.push_back({std::stod(cell[0]), Vec3(std::stod(cell[1]), std::stod(cell[2]), std::stod(cell[3])),
                    std::stod(cell[4]), parse_stage(cell[5])});
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace cql
