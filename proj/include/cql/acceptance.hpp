#pragma once

#include "cql/integrate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cql {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  std::vector<std::string> notes;  // informational, never part of the verdict
  double seconds = 0.0;
};

struct AcceptanceOptions {
  IntegratorOptions integrator;
  std::uint64_t seed = 20240521;
};

inline constexpr int kCriteriaCount = 12;

CriterionResult run_criterion(int id, const AcceptanceOptions& opt = {});
// Runs the selected criteria (all when empty) in parallel, ordered by id.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {}, const AcceptanceOptions& opt = {});

std::string format_result(const CriterionResult& r);

}  // namespace cql
