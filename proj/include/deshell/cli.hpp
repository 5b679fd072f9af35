#pragma once

// deshell command-line front end. Each command validates everything it needs
// before touching the output directory, so a failed run leaves nothing behind.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace deshell::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDivergence = 3,
  kGeometryError = 4,
};

/// Ensemble and integrator settings shared by simulate and sweep-b2.
struct RunSettings {
  std::size_t classes = 257;
  double span_sigmas = 3.0;
  double fwhm_hz = 680e3;
  double optical_decay_hz = 2e3;  ///< Gamma31 = Gamma32 = gamma31 = gamma32
  double spin_decay_hz = 0.0;     ///< Gamma21 = gamma21
  double dt_pulse = 0.5e-9;
  double dt_idle = 5e-9;
  double sample_interval = 50e-9;
  std::size_t threads = 0;
  std::optional<std::pair<double, double>> window;
};

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path output = ".";
  RunSettings run;
  std::vector<double> record_detunings_hz;
  std::string command_line;
};

struct SweepCommandOptions {
  std::filesystem::path config;
  std::filesystem::path output = ".";
  RunSettings run;
  std::vector<double> areas_pi;
  std::string command_line;
};

struct AnalyticOptions {
  std::string subcommand;  ///< table1 | fig3 | predicate
  std::optional<std::filesystem::path> output;
  unsigned max_m = 10;
  unsigned b1_pi = 3;
  std::vector<unsigned> b2_pi;
  std::string eta = "0:1:0.005";
  std::string mode = "all";  ///< all | total | effective | effective-no-zeroth
  std::string regime = "short";
  std::string command_line;
};

/// timeseries.csv, echo.json, manifest.json.
int cmd_simulate(const SimulateOptions& options, std::ostream& err);
/// sweep.csv, manifest.json.
int cmd_sweep_b2(const SweepCommandOptions& options, std::ostream& err);
/// Writes to `out` unless an output directory is given.
int cmd_analytic(const AnalyticOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv (program name first) and dispatches.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deshell::cli
