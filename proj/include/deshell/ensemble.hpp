#pragma once

// Inhomogeneously broadened ensemble of independent detuning classes.

#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "deshell/pulse_program.hpp"
#include "deshell/quantum_core.hpp"

namespace deshell {

struct DetuningGrid {
  std::vector<double> detunings;  ///< rad/s, symmetric about 0
  std::vector<double> weights;    ///< sum to 1
  double fwhm = 0.0;              ///< rad/s
  double span_sigmas = 0.0;

  std::size_t classes() const { return detunings.size(); }
  /// Uniform spacing (0 for a single class).
  double spacing() const;
  /// 2 pi / spacing: when the discrete ensemble rephases by itself.
  double recurrence_time() const;

  /// One class of unit weight.
  static DetuningGrid single(double detuning);
};

/// Uniform grid over +-span_sigmas * sigma with Gaussian weights, sigma = FWHM / (2 sqrt(2 ln 2)).
/// Needs classes >= 3 and odd, span_sigmas > 0. When a horizon is given the
/// recurrence time must exceed it; otherwise ConfigError reports the minimum
/// class count.
DetuningGrid gaussian_grid(double fwhm, std::size_t classes, double span_sigmas,
                           std::optional<double> horizon = std::nullopt);

/// Smallest odd class count whose recurrence time exceeds the horizon.
std::size_t minimum_classes(double fwhm, double span_sigmas, double horizon);

struct RecordOptions {
  std::vector<double> detunings;  ///< rad/s; full trajectories kept for these classes
  std::size_t threads = 0;        ///< 0 = hardware concurrency
};

/// Worst values seen over every class and every snapshot.
struct IntegrityStats {
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 1.0;
};

struct EnsembleSetup {
  PulseSequence sequence;
  DetuningGrid grid;
  DecayRates decays;
  StepPlan plan;
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<Complex> polarization;  ///< P(t) = sum_k w_k rho13^(k)(t)
  std::vector<Trajectory> recorded;   ///< one per RecordOptions::detunings entry
  IntegrityStats integrity;
  EnsembleSetup setup;

  double max_abs_polarization() const;
};

/// Propagates every class from t = 0 to the sequence horizon. Classes run
/// concurrently; the weighted sum is taken in grid order so P(t) is
/// bit-identical for any thread count. IntegrationDiverged names the class.
EnsembleResult run_ensemble(const PulseSequence& sequence, const DetuningGrid& grid, const DecayRates& decays,
                            const DensityMatrix& initial, const StepPlan& plan, const RecordOptions& record = {});

struct EchoReport {
  double window_start = 0.0;
  double window_end = 0.0;
  double peak_time = 0.0;
  double peak_amplitude = 0.0;  ///< |P|
  double peak_intensity = 0.0;  ///< |P|^2
  bool has_echo = false;
  std::optional<double> reference_amplitude;

  /// peak_amplitude / reference_amplitude, when a reference is set.
  std::optional<double> amplitude_ratio() const;
};

/// [t_R + 1 us, horizon], pushed past the last pulse if needed.
std::pair<double, double> default_echo_window(const PulseSequence& sequence);

/// Largest |P| in the window, refined by a parabola through the neighbouring
/// samples. ConfigError for an empty window, one outside the run, or one that
/// overlaps a pulse.
EchoReport echo_metrics(const EnsembleResult& result, double window_start, double window_end);

// ---------------------------------------------------------------------------
// B2 area sweep

struct SweepOptions {
  double atom_detuning = 2 * std::numbers::pi * 30e3;  ///< rad/s, single atom tracked for its phase
  double phase_tolerance = 0.05;                       ///< rad
  std::optional<std::pair<double, double>> window;     ///< defaults to default_echo_window
  std::size_t threads = 0;
};

struct SweepRow {
  double area = 0.0;  ///< rad
  EchoReport echo;
  double atom_phase_end = 0.0;        ///< arg(rho13) at the end of B2, wrapped
  double atom_phase_reference = 0.0;  ///< pre-B1 phase advanced by delta * (tau_B1 + tau_B2) / 2, wrapped
  double atom_rho33_pre_b1 = 0.0;
  double atom_rho33_end = 0.0;
  double atom_coherence_ratio = 0.0;  ///< |rho13| after B2 over |rho13| before B1
  bool phase_recovered = false;       ///< ratio >= 0.5 and phase within tolerance of the reference
};

/// Copy of `base` with B2 stretched to `area` at its Rabi frequency. Throws
/// GeometryError naming the area if B2 would run into R, InvalidSequence when
/// the base has no B1/B2/R pulses or the area is not positive.
PulseSequence with_b2_area(const PulseSequence& base, double area);

/// Runs the ensemble once per area. All geometries are checked before any run.
std::vector<SweepRow> sweep_b2_area(const PulseSequence& base, std::span<const double> areas,
                                    const DetuningGrid& grid, const DecayRates& decays,
                                    const DensityMatrix& initial, const StepPlan& plan,
                                    const SweepOptions& options = {});

}  // namespace deshell
