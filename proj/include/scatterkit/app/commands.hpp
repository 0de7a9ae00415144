#pragma once

// verify / scan / twobody: each loads a scenario, runs, writes its files
// under the output directory and returns a process exit code.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scatterkit/app/scenario.hpp"

namespace scatterkit::app {

enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

int exit_code_for(ErrorKind kind);

struct RunOptions {
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed_override;
};

/// Thread count from the flag, then SCATTERKIT_THREADS, then the hardware.
unsigned resolve_threads(const RunOptions& opts);

/// Config with the command-line overrides applied.
ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opts);

struct CheckResult {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool passed = false;
  bool applicable = true;
};

/// The identity battery at z = verify energy + i grid.eps.
std::vector<CheckResult> verify_checks(const ScenarioConfig& cfg);

struct TwoBodyReport {
  std::complex<double> grid_on_shell;
  std::complex<double> analytic_on_shell;
  double relative_gap = 0;
  double optical_residual = 0;  ///< |Im(1/T) - pi k / 2| / (pi k / 2)
  std::optional<double> bound_grid;
  std::optional<double> bound_analytic;
  std::vector<int> doubling_nodes;  ///< nodes / 4, nodes / 2, nodes
  std::vector<std::complex<double>> doubling_values;
  double doubling_ratio = 0;
  std::vector<CheckResult> checks;
};

TwoBodyReport twobody_report(const TwoBodyConfig& cfg, double condition_limit);

/// The fixed scan.csv header.
const std::vector<std::string>& scan_columns();

/// scan.csv body for a finished scan (header line included).
std::string scan_csv(const ScanResult<double>& scan);

int cmd_verify(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_scan(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_twobody(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace scatterkit::app
