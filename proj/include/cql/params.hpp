#pragma once

#include "cql/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cql {

// Slope of the perturbative convention D2 = D1 + kD21Slope * lambda.
inline constexpr double kD21Slope = 6.51;

struct MaterialParams {
  double D1 = 0.0411;
  double D2 = 0.1127;
  double D3 = 0.8527;
  double alpha_t = 2.0;
  double lambda = 0.011;
  double Omega = 0.0676;
  double beta_e_t = 3.0;
  double K = 0.07;
  // Unscaled expulsion current. When unset, beta_e = lambda * beta_e_t.
  std::optional<double> beta_e;
};

struct DerivedParams {
  MaterialParams raw;
  double D1, D2, D3;
  double D21, D31, D32;
  double lambda;
  double alpha_t, alpha;
  double D21_t;
  double h2_t, h2;
  double Omega, gamma;
  double sigma, omega, rho;
  double K;
  double beta_e, beta_e_t;
  Vec3 s_minus, s_plus;
};

DerivedParams derive_params(const MaterialParams& raw);

struct Diagnostic {
  std::string name;
  bool pass;
  double margin;
  std::string detail;
};
using DiagnosticsList = std::vector<Diagnostic>;

DiagnosticsList validate_admissibility(const DerivedParams& p);

enum class Figure { FIG2, FIG3, FIG4, FIG5, FIG6, FIG7 };

struct PresetRow {
  Figure figure;
  double D2;
  double alpha_t;
  std::optional<double> beta_e_t;
  double Omega;
  double h2_t;
  double K;
};

PresetRow preset_row(Figure id);
MaterialParams preset(Figure id);
Figure parse_figure(const std::string& name);
std::string figure_name(Figure id);

// Expulsion current of the presets.
inline constexpr double kCaptionBetaE = 0.03;
// lambda of the full switching example.
inline constexpr double kCaptionLambdaFig6 = 0.002;

using Setting = std::pair<std::string, std::string>;

// Keys: d1 d2 d3 alpha_t lambda omega_cap h2_t beta_e_t beta_e k_target.
// Setting lambda without d2 moves D2 to D1 + 6.51 lambda. h2_t is converted
// to Omega after all other keys are applied.
MaterialParams apply_settings(MaterialParams base, const std::vector<Setting>& settings);
std::vector<Setting> parse_config_text(const std::string& text);
std::vector<Setting> load_config_file(const std::string& path);
Setting parse_setting(const std::string& assignment);

}  // namespace cql
