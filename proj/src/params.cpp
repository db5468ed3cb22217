#include "cql/params.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cql {

namespace {

std::string trim(const std::string& s) {
  auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
  return b < e ? std::string(b, e) : std::string();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("setting '" + key + "': not a number: '" + value + "'");
  }
}

}  // namespace

DerivedParams derive_params(const MaterialParams& raw) {
  if (!(raw.D1 < raw.D2)) throw ParameterError("ordering violated: D1 < D2");
  if (!(raw.D2 < raw.D3)) throw ParameterError("ordering violated: D2 < D3");
  if (!(raw.D1 > 0.0)) throw ParameterError("ordering violated: 0 < D1");
  if (!(raw.lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (raw.alpha_t < 0.0) throw ParameterError("alpha_t must be non-negative");
  if (raw.K < 0.0 || std::sqrt(2.0) * raw.K > 1.0)
    throw ParameterError("K must satisfy 0 <= sqrt(2) K <= 1");
  if (std::abs(raw.Omega) >= 1.0) throw ParameterError("|Omega| must be below 1");

  DerivedParams p;
  p.raw = raw;
  p.D1 = raw.D1;
  p.D2 = raw.D2;
  p.D3 = raw.D3;
  p.D21 = raw.D2 - raw.D1;
  p.D31 = raw.D3 - raw.D1;
  p.D32 = raw.D3 - raw.D2;
  p.lambda = raw.lambda;
  p.alpha_t = raw.alpha_t;
  p.alpha = raw.lambda * raw.alpha_t;
  p.D21_t = p.D21 / raw.lambda;
  p.Omega = raw.Omega;
  p.h2_t = -p.D21_t * raw.Omega;
  p.h2 = -p.D21 * raw.Omega;
  p.gamma = std::sqrt(1.0 - raw.Omega * raw.Omega);
  p.sigma = std::sqrt(p.D32 / p.D31);
  p.K = raw.K;
  p.omega = raw.K * std::sqrt(p.D32 * p.D31);
  p.rho = 1.0 / (1.0 - raw.K * raw.K);
  p.beta_e = raw.beta_e ? *raw.beta_e : raw.lambda * raw.beta_e_t;
  p.beta_e_t = p.beta_e / raw.lambda;
  p.s_minus = Vec3(-p.gamma, -p.Omega, 0.0);
  p.s_plus = Vec3(p.gamma, -p.Omega, 0.0);
  return p;
}

DiagnosticsList validate_admissibility(const DerivedParams& p) {
  DiagnosticsList out;
  const double ratio = p.D21 / p.D31;
  const double k_margin = 1.0 - std::sqrt(2.0) * p.K;
  out.push_back({"sqrt(2) K <= 1", k_margin >= 0.0, k_margin, "target latitude reachable"});
  const double omega_margin = 3.0 * p.Omega * p.Omega - 2.0 * ratio;
  out.push_back({"3 Omega^2 >= 2 D21/D31", omega_margin >= 0.0, omega_margin, "field strength condition"});
  const double gamma_margin = p.gamma - 16.0 * std::sqrt(ratio);
  out.push_back({"16 sqrt(D21/D31) <= gamma", gamma_margin >= 0.0, gamma_margin, "anisotropy condition"});
  const double r_sm = p.gamma * p.D21 / (4.0 * std::abs(p.Omega) * p.D31);
  const double r_margin = r_sm - 1.25 * p.K;
  out.push_back({"r_sm >= (5/4) K", r_margin >= 0.0, r_margin, "basin disk covers the transfer endpoint"});
  return out;
}

PresetRow preset_row(Figure id) {
  switch (id) {
    case Figure::FIG2: return {id, 0.1127, 2.0, 3.0, 0.0676, -0.4400, 0.0700};
    case Figure::FIG3: return {id, 0.1127, 2.0, 3.0, 0.0676, -0.4400, 0.0800};
    case Figure::FIG4: return {id, 0.0802, 4.0, std::nullopt, 0.1799, -1.1708, 0.0524};
    case Figure::FIG5: return {id, 0.0802, 4.0, 3.0, 0.1036, -0.6741, 0.0308};
    case Figure::FIG6: return {id, 0.0802, 2.0, 3.0, 0.1036, -0.6741, 0.0308};
    case Figure::FIG7: return {id, 0.0802, 2.0, 3.0, 0.1036, -0.6741, 0.0308};
  }
  throw ParameterError("unknown figure preset");
}

MaterialParams preset(Figure id) {
  const PresetRow row = preset_row(id);
  MaterialParams m;
  m.D1 = 0.0411;
  m.D3 = 0.8527;
  m.D2 = row.D2;
  m.lambda = (row.D2 - m.D1) / kD21Slope;
  m.alpha_t = row.alpha_t;
  m.Omega = row.Omega;
  m.K = row.K;
  if (row.beta_e_t) {
    m.beta_e_t = *row.beta_e_t;
    m.beta_e = kCaptionBetaE;
  } else {
    m.beta_e_t = 0.0;
    m.beta_e.reset();
  }
  return m;
}

Figure parse_figure(const std::string& name) {
  static const std::map<std::string, Figure> table = {
      {"fig2", Figure::FIG2}, {"fig3", Figure::FIG3}, {"fig4", Figure::FIG4},
      {"fig5", Figure::FIG5}, {"fig6", Figure::FIG6}, {"fig7", Figure::FIG7}};
  auto it = table.find(lower(trim(name)));
  if (it == table.end()) throw ParameterError("unknown preset '" + name + "' (expected fig2..fig7)");
  return it->second;
}

std::string figure_name(Figure id) {
  switch (id) {
    case Figure::FIG2: return "fig2";
    case Figure::FIG3: return "fig3";
    case Figure::FIG4: return "fig4";
    case Figure::FIG5: return "fig5";
    case Figure::FIG6: return "fig6";
    case Figure::FIG7: return "fig7";
  }
  return "unknown";
}

MaterialParams apply_settings(MaterialParams m, const std::vector<Setting>& settings) {
  std::map<std::string, double> v;
  for (const auto& [key_raw, value] : settings) {
    const std::string key = lower(trim(key_raw));
    static const char* known[] = {"d1", "d2", "d3", "alpha_t", "lambda", "omega_cap",
                                  "h2_t", "beta_e_t", "beta_e", "k_target"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known))
      throw ParameterError("unknown setting '" + key_raw + "'");
    v[key] = to_double(key, trim(value));
  }
  if (v.count("omega_cap") && v.count("h2_t"))
    throw ParameterError("omega_cap and h2_t are alternatives; set only one");

  if (v.count("d1")) m.D1 = v["d1"];
  if (v.count("d3")) m.D3 = v["d3"];
  if (v.count("lambda")) {
    m.lambda = v["lambda"];
    if (!v.count("d2")) m.D2 = m.D1 + kD21Slope * m.lambda;
  }
  if (v.count("d2")) m.D2 = v["d2"];
  if (v.count("alpha_t")) m.alpha_t = v["alpha_t"];
  if (v.count("k_target")) m.K = v["k_target"];
  if (v.count("beta_e_t")) {
    m.beta_e_t = v["beta_e_t"];
    if (!v.count("beta_e")) m.beta_e.reset();
  }
  if (v.count("beta_e")) m.beta_e = v["beta_e"];
  if (v.count("omega_cap")) m.Omega = v["omega_cap"];
  if (v.count("h2_t")) {
    if (!(m.lambda > 0.0) || m.D2 == m.D1) throw ParameterError("h2_t needs lambda > 0 and D2 != D1");
    m.Omega = -v["h2_t"] * m.lambda / (m.D2 - m.D1);
  }
  return m;
}

Setting parse_setting(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ParameterError("expected key=value, got '" + assignment + "'");
  return {trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))};
}

std::vector<Setting> parse_config_text(const std::string& text) {
  std::vector<Setting> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    out.push_back(parse_setting(line));
  }
  return out;
}

std::vector<Setting> load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace cql
