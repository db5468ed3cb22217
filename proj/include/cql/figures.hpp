#pragma once

#include "cql/expulsion.hpp"
#include "cql/integrate.hpp"
#include "cql/params.hpp"
#include "cql/pipeline.hpp"
#include "cql/report.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cql {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_table(std::ostream& os, const Table& table);
void write_table_file(const std::string& path, const Table& table);

// tau, xi, xi', |xi - xi'| on [0, T_e] from xi(0) = 0.
Table expulsion_series(const ExpulsionPlan& plan, const DerivedParams& p, double dt,
                       const IntegratorOptions& opt = {});

// t, beta_t, beta on [-T_e, T_tr].
Table control_series(const ControlWaveform& control, double dt);

// Attraction samples shifted back to u = U + s^+.
std::vector<CsvRow> attraction_rows(const Trajectory& tr, const DerivedParams& p, double dt);

// t, W along an attraction run.
Table lyapunov_series(const std::vector<std::pair<double, double>>& W);

struct FigureOptions {
  IntegratorOptions integrator;
  double dt_export = 0.1;
};

// Writes the CSV files of one figure below dir and returns their paths.
std::vector<std::string> reproduce_figure(Figure fig, const std::string& dir, const FigureOptions& opt = {});

}  // namespace cql
