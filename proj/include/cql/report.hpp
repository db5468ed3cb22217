#pragma once

#include "cql/pipeline.hpp"

#include <functional>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace cql {

inline constexpr const char* kSchemaVersion = "cql-switch/1";

nlohmann::json to_json(const DerivedParams& p);
nlohmann::json to_json(const ExpulsionPlan& plan);
nlohmann::json to_json(const TransferPlan& plan);
nlohmann::json to_json(const DiagnosticsList& diagnostics);
nlohmann::json to_json(const SwitchingPlans& plans);

// The dense output is not serialized; every other field round-trips exactly.
nlohmann::json to_json(const SwitchingReport& report, bool with_trajectory = true);
SwitchingReport report_from_json(const nlohmann::json& j);

struct CsvRow {
  double t;
  Vec3 u;
  double beta;
  Stage stage;
};

// dt <= 0 keeps the integrator samples. Otherwise the dense output is sampled
// on a uniform grid; beta comes from the given function or is held from the
// preceding sample.
std::vector<CsvRow> csv_rows(const Trajectory& tr, double dt = 0.0,
                             const std::function<double(double)>& beta = {});
void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& is);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace cql
