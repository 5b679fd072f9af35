#include "deshell/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "deshell/ensemble.hpp"
#include "deshell/errors.hpp"
#include "deshell/leakage.hpp"
#include "deshell/pulse_program.hpp"
#include "deshell/report.hpp"

#ifndef DESHELL_VERSION
#define DESHELL_VERSION "0.0.0"
#endif

namespace deshell::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;
constexpr double kTwoPi = 2 * std::numbers::pi;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) return "unavailable";
  std::string hex;
  static constexpr char kHex[] = "0123456789abcdef";
  for (unsigned i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read sequence config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char text[32];
  std::strftime(text, sizeof text, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return text;
}

DecayRates decays_of(const RunSettings& s) {
  DecayRates d = DecayRates::optical(kTwoPi * s.optical_decay_hz);
  d.population_21 = kTwoPi * s.spin_decay_hz;
  d.coherence_21 = kTwoPi * s.spin_decay_hz;
  return d;
}

StepPlan plan_of(const RunSettings& s) { return {s.dt_pulse, s.dt_idle, s.sample_interval}; }

ordered_json settings_json(const RunSettings& s) {
  ordered_json j;
  j["integrator"] = ordered_json{{"method", "rk4-fixed-step"},
                                 {"dt_pulse_s", s.dt_pulse},
                                 {"dt_idle_s", s.dt_idle},
                                 {"sample_interval_s", s.sample_interval}};
  j["grid"] = ordered_json{{"shape", "gaussian"},
                           {"classes", s.classes},
                           {"span_sigmas", s.span_sigmas},
                           {"fwhm_hz", s.fwhm_hz}};
  j["decays"] = ordered_json{{"optical_hz", s.optical_decay_hz},
                             {"spin_hz", s.spin_decay_hz},
                             {"angular", true}};
  return j;
}

// Owns the bookkeeping common to every manifest.
class Manifest {
 public:
  Manifest(std::string command, std::string command_line)
      : started_(std::chrono::steady_clock::now()), started_utc_(utc_now()) {
    json_["tool"] = "deshell";
    json_["version"] = DESHELL_VERSION;
    json_["command"] = std::move(command);
    json_["command_line"] = std::move(command_line);
  }

  ordered_json& json() { return json_; }

  std::string finish(const std::vector<std::string>& outputs) {
    json_["outputs"] = outputs;
    json_["started_utc"] = started_utc_;
    json_["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    return json_.dump(2) + "\n";
  }

 private:
  ordered_json json_;
  std::chrono::steady_clock::time_point started_;
  std::string started_utc_;
};

// Creates the directory and writes every file, only once all content exists.
void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out << content;
    if (!out) throw ConfigError("failed writing " + (dir / name).string());
  }
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const GeometryError& e) {
    err << "error: " << e.what() << '\n';
    return kGeometryError;
  } catch (const IntegrationDiverged& e) {
    err << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::logic_error& e) {  // invalid_argument, domain_error, out_of_range
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

struct Loaded {
  std::string text;
  PulseSequence sequence;
};

Loaded load(const fs::path& path) {
  std::string text = read_file(path);
  try {
    return {text, parse_sequence_config(text)};
  } catch (const InvalidSequence& e) {
    throw InvalidSequence(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<double> parse_list_or_range(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
    if (parts.size() != 3) throw std::invalid_argument("range must be lo:hi:step, got '" + text + "'");
    return leakage::linear_grid(parts[0], parts[1], parts[2]);
  }
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

int cmd_simulate(const SimulateOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    Manifest manifest("simulate", options.command_line);
    const Loaded config = load(options.config);
    const RunSettings& s = options.run;
    const DetuningGrid grid =
        gaussian_grid(kTwoPi * s.fwhm_hz, s.classes, s.span_sigmas, config.sequence.horizon());
    RecordOptions record;
    record.threads = s.threads;
    for (double hz : options.record_detunings_hz) record.detunings.push_back(kTwoPi * hz);

    const auto window = s.window.value_or(default_echo_window(config.sequence));
    const EnsembleResult result =
        run_ensemble(config.sequence, grid, decays_of(s), DensityMatrix::ground(), plan_of(s), record);
    const EchoReport echo = echo_metrics(result, window.first, window.second);

    std::ostringstream csv;
    report::write_timeseries_csv(csv, result);
    manifest.json()["config"] = ordered_json{{"path", options.config.string()},
                                             {"sha256", sha256_hex(config.text)},
                                             {"name", config.sequence.name()}};
    manifest.json()["settings"] = settings_json(s);
    manifest.json()["record_detunings_hz"] = options.record_detunings_hz;
    manifest.json()["integrity"] = ordered_json{{"max_trace_error", result.integrity.max_trace_error},
                                                {"max_hermiticity_error", result.integrity.max_hermiticity_error},
                                                {"min_eigenvalue", result.integrity.min_eigenvalue}};
    const std::string manifest_text = manifest.finish({"timeseries.csv", "echo.json"});
    write_outputs(options.output, {{"timeseries.csv", csv.str()},
                                   {"echo.json", report::echo_json(echo).dump(2) + "\n"},
                                   {"manifest.json", manifest_text}});
    return kOk;
  });
}

int cmd_sweep_b2(const SweepCommandOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    Manifest manifest("sweep-b2", options.command_line);
    const Loaded config = load(options.config);
    const RunSettings& s = options.run;
    if (options.areas_pi.empty()) throw ConfigError("--areas: at least one area is required");
    std::vector<double> areas;
    for (double a : options.areas_pi) areas.push_back(a * std::numbers::pi);
    const DetuningGrid grid =
        gaussian_grid(kTwoPi * s.fwhm_hz, s.classes, s.span_sigmas, config.sequence.horizon());
    SweepOptions sweep;
    sweep.threads = s.threads;
    sweep.window = s.window;
    const auto rows =
        sweep_b2_area(config.sequence, areas, grid, decays_of(s), DensityMatrix::ground(), plan_of(s), sweep);

    std::ostringstream csv;
    report::write_sweep_csv(csv, rows);
    manifest.json()["config"] = ordered_json{{"path", options.config.string()},
                                             {"sha256", sha256_hex(config.text)},
                                             {"name", config.sequence.name()}};
    manifest.json()["settings"] = settings_json(s);
    manifest.json()["areas_pi"] = options.areas_pi;
    manifest.json()["atom_detuning_hz"] = sweep.atom_detuning / kTwoPi;
    manifest.json()["phase_tolerance_rad"] = sweep.phase_tolerance;
    const std::string manifest_text = manifest.finish({"sweep.csv"});
    write_outputs(options.output, {{"sweep.csv", csv.str()}, {"manifest.json", manifest_text}});
    return kOk;
  });
}

int cmd_analytic(const AnalyticOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Manifest manifest("analytic " + options.subcommand, options.command_line);
    std::vector<std::pair<std::string, std::string>> files;
    const auto regime = leakage::parse_regime(options.regime);

    if (options.subcommand == "table1") {
      if (options.max_m > 60) throw ConfigError("--max-m must be <= 60");
      std::ostringstream csv;
      report::write_table1_csv(csv, options.max_m);
      files.emplace_back("table1.csv", csv.str());
      manifest.json()["max_m"] = options.max_m;
    } else if (options.subcommand == "fig3") {
      if (options.b2_pi.empty()) throw ConfigError("--b2: at least one B2 area is required");
      if (regime == leakage::Regime::long_t && options.b1_pi == 0) throw ConfigError("--b1 must be >= 1 for long-T");
      const auto eta = parse_list_or_range(options.eta);
      if (eta.empty()) throw ConfigError("--eta: empty grid");
      for (double e : eta) {
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("--eta: values must lie in [0, 1]");
      }
      const auto data = leakage::figure3_dataset(options.b1_pi, options.b2_pi, eta, regime);
      std::vector<leakage::Fig3Mode> modes;
      if (options.mode == "all") {
        modes = {leakage::Fig3Mode::total, leakage::Fig3Mode::effective, leakage::Fig3Mode::effective_no_zeroth};
      } else if (options.mode == "total") {
        modes = {leakage::Fig3Mode::total};
      } else if (options.mode == "effective") {
        modes = {leakage::Fig3Mode::effective};
      } else if (options.mode == "effective-no-zeroth") {
        modes = {leakage::Fig3Mode::effective_no_zeroth};
      } else {
        throw ConfigError("--mode must be all, total, effective or effective-no-zeroth");
      }
      for (auto mode : modes) {
        std::ostringstream csv;
        report::write_fig3_csv(csv, data, mode);
        files.emplace_back("fig3_" + std::string(leakage::to_string(mode)) + ".csv", csv.str());
      }
      manifest.json()["b1_pi"] = options.b1_pi;
      manifest.json()["b2_pi"] = options.b2_pi;
      manifest.json()["eta"] = options.eta;
      manifest.json()["regime"] = options.regime;
    } else if (options.subcommand == "predicate") {
      if (options.b2_pi.size() != 1) throw ConfigError("--b2: predicate takes exactly one B2 area");
      files.emplace_back("predicate.json",
                         report::predicate_json(options.b1_pi, options.b2_pi.front(), regime).dump(2) + "\n");
    } else {
      throw ConfigError("analytic subcommand must be table1, fig3 or predicate");
    }

    if (options.output) {
      std::vector<std::string> names;
      for (const auto& f : files) names.push_back(f.first);
      files.emplace_back("manifest.json", manifest.finish(names));
      write_outputs(*options.output, files);
    } else {
      for (std::size_t i = 0; i < files.size(); ++i) {
        if (files.size() > 1) out << (i ? "\n" : "") << "# " << files[i].first << '\n';
        out << files[i].second;
      }
    }
    return kOk;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon-echo deshelling simulator and leakage model", "deshell"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DESHELL_VERSION);

  std::string command_line;
  for (std::size_t i = 0; i < args.size(); ++i) command_line += (i ? " " : "") + args[i];

  // Global flags.
  fs::path output;
  RunSettings settings;
  std::vector<double> record_hz;
  std::vector<double> window;
  app.add_option("--output,-o", output, "Output directory");
  app.add_option("--classes", settings.classes, "Detuning classes (odd, >= 3)")->capture_default_str();
  app.add_option("--span-sigmas", settings.span_sigmas, "Grid half-width in sigmas")->capture_default_str();
  app.add_option("--fwhm-hz", settings.fwhm_hz, "Inhomogeneous FWHM (Hz)")->capture_default_str();
  app.add_option("--optical-decay-hz", settings.optical_decay_hz, "Optical decay rates (Hz)")->capture_default_str();
  app.add_option("--spin-decay-hz", settings.spin_decay_hz, "Spin decay rates (Hz)")->capture_default_str();
  app.add_option("--dt-pulse", settings.dt_pulse, "RK4 step inside pulses (s)")->capture_default_str();
  app.add_option("--dt-idle", settings.dt_idle, "RK4 step between pulses (s)")->capture_default_str();
  app.add_option("--sample-interval", settings.sample_interval, "Snapshot interval (s)")->capture_default_str();
  app.add_option("--threads", settings.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--record-detunings", record_hz, "Detunings (Hz) to record per class")->delimiter(',');
  app.add_option("--window", window, "Echo search window start,end (s)")->delimiter(',')->expected(2);
  app.fallthrough();

  auto* simulate = app.add_subcommand("simulate", "Run an ensemble for a sequence config");
  fs::path config;
  simulate->add_option("config", config, "Sequence config (JSON)")->required();

  auto* sweep = app.add_subcommand("sweep-b2", "Re-run a locked-echo config for several B2 areas");
  std::string areas_text;
  sweep->add_option("config", config, "Base locked-echo config (JSON)")->required();
  sweep->add_option("--areas", areas_text, "B2 areas in units of pi: 1,2,3 or lo:hi:step")->required();

  auto* analytic = app.add_subcommand("analytic", "Analytic leakage model datasets");
  analytic->require_subcommand(1);
  AnalyticOptions analytic_options;
  std::string b2_text;
  auto* table1 = analytic->add_subcommand("table1", "B_nm coefficient table");
  table1->add_option("--max-m", analytic_options.max_m)->capture_default_str();
  auto* fig3 = analytic->add_subcommand("fig3", "Excited-state population versus eta");
  fig3->add_option("--b1", analytic_options.b1_pi)->capture_default_str();
  fig3->add_option("--b2", b2_text, "B2 areas in units of pi, comma separated")->required();
  fig3->add_option("--eta", analytic_options.eta, "lo:hi:step or comma list")->capture_default_str();
  fig3->add_option("--mode", analytic_options.mode)->capture_default_str();
  fig3->add_option("--regime", analytic_options.regime)->capture_default_str();
  auto* predicate = analytic->add_subcommand("predicate", "Phase-recovery verdict");
  predicate->add_option("--b1", analytic_options.b1_pi)->required();
  predicate->add_option("--b2", b2_text)->required();
  predicate->add_option("--regime", analytic_options.regime)->capture_default_str();
  for (auto* sub : {simulate, sweep, analytic, table1, fig3, predicate}) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    for (auto* sub : app.get_subcommands()) out << sub->help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << DESHELL_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  if (!window.empty()) settings.window = std::make_pair(window[0], window[1]);

  if (simulate->parsed()) {
    SimulateOptions o{config, output.empty() ? fs::path(".") : output, settings, record_hz, command_line};
    return cmd_simulate(o, err);
  }
  if (sweep->parsed()) {
    return guarded(err, [&] {
      SweepCommandOptions o{config, output.empty() ? fs::path(".") : output, settings,
                            parse_list_or_range(areas_text), command_line};
      return cmd_sweep_b2(o, err);
    });
  }
  return guarded(err, [&] {
    analytic_options.subcommand = table1->parsed() ? "table1" : fig3->parsed() ? "fig3" : "predicate";
    if (!output.empty()) analytic_options.output = output;
    analytic_options.command_line = command_line;
    for (double v : parse_list_or_range(b2_text)) {
      if (v < 0.0 || v != std::floor(v)) throw ConfigError("--b2: areas must be whole non-negative multiples of pi");
      analytic_options.b2_pi.push_back(static_cast<unsigned>(v));
    }
    return cmd_analytic(analytic_options, out, err);
  });
}

}  // namespace deshell::cli
