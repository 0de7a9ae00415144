#pragma once

// Scenario configuration for the command-line front end. JSON on disk,
// parsed strictly: unknown keys and wrong types are rejected.

#include <optional>
#include <string>
#include <vector>

#include "scatterkit/diagnostics.hpp"
#include "scatterkit/modelspace.hpp"

namespace scatterkit::app {

struct TwoBodyConfig {
  double beta = 1.0;
  double strength = -3.0;
  int nodes = 200;
  double cutoff = 100.0;
  double k_on = 0.7;
  double analytic_tolerance = 1e-6;   ///< grid vs closed form, relative
  double bound_tolerance = 1e-8;      ///< bound-state energy, absolute
  double convergence_limit = 0.25;    ///< node-doubling ratio

  bool operator==(const TwoBodyConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "scatterkit-out";
  bool csv = true;
  bool json = true;
  bool plots = true;

  bool operator==(const OutputConfig&) const = default;
};

struct ScenarioConfig {
  ModelConfig model;
  EnergyGridSpec grid;
  std::optional<double> verify_e0;  ///< energy of the verify battery; grid.e_min when absent
  std::vector<double> coupling_scan;
  Thresholds thresholds;
  TwoBodyConfig twobody;
  OutputConfig outputs;

  double verify_energy() const { return verify_e0.value_or(grid.e_min); }

  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws Error(config) with the line and column of a syntax error, or the
/// key path of a schema violation.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

/// Every field written explicitly; parse_scenario(serialize_scenario(c)) == c.
std::string serialize_scenario(const ScenarioConfig& cfg);

void validate(const ScenarioConfig& cfg);

}  // namespace scatterkit::app
