#pragma once

// Single detuning class of a three-level Lambda system.
//
// Levels: |1> ground, |2> auxiliary spin ground, |3> optically excited.
// Matrices are indexed 0..2 internally; the public element accessors take the
// physicist's 1-based labels (rho(1, 3) is rho13).

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <vector>

namespace deshell {

using Complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

/// 1-based matrix element label, e.g. {1, 3} for rho13.
struct Element {
  int row = 1;
  int col = 3;
};

class DensityMatrix {
 public:
  /// All population in |1>.
  DensityMatrix();
  /// Validates Hermiticity and unit trace to 1e-12.
  explicit DensityMatrix(const Matrix3c& rho);

  static DensityMatrix ground() { return DensityMatrix(); }
  /// |psi><psi| for a normalised amplitude vector.
  static DensityMatrix pure(const Vector3c& psi);
  /// Wrap an integrator output without re-validating.
  static DensityMatrix unchecked(const Matrix3c& rho);

  Complex operator()(int i, int j) const { return rho_(i - 1, j - 1); }
  double population(int i) const { return rho_(i - 1, i - 1).real(); }
  const Matrix3c& matrix() const { return rho_; }

  double trace_error() const;        ///< |tr(rho) - 1|
  double hermiticity_error() const;  ///< max |rho_ij - conj(rho_ji)|
  double min_eigenvalue() const;     ///< of the Hermitian part

 private:
  Matrix3c rho_;
};

/// Population and transverse decay rates, all in s^-1.
struct DecayRates {
  double population_31 = 0.0;  ///< Gamma31: |3> -> |1>
  double population_32 = 0.0;  ///< Gamma32: |3> -> |2>
  double population_21 = 0.0;  ///< Gamma21: |2> -> |1>
  double coherence_31 = 0.0;   ///< gamma31 on rho13
  double coherence_32 = 0.0;   ///< gamma32 on rho23
  double coherence_21 = 0.0;   ///< gamma21 on rho12

  /// Gamma31 = Gamma32 = gamma31 = gamma32 = rate, spin transition lossless.
  static DecayRates optical(double rate) { return {rate, rate, 0.0, rate, rate, 0.0}; }
  /// Throws ConfigError on a negative or non-finite rate.
  void validate() const;
};

/// Field amplitudes at one instant. p drives |1>-|3>, c drives |2>-|3>.
struct DriveSample {
  double rabi_p = 0.0;   ///< rad/s
  double phase_p = 0.0;  ///< rad
  double rabi_c = 0.0;
  double phase_c = 0.0;

  bool is_zero() const { return rabi_p == 0.0 && rabi_c == 0.0; }
};

/// H/hbar in the rotating frame (rad/s):
///   delta |3><3| - (rabi_p/2)(e^{i phase_p}|3><1| + h.c.) - (rabi_c/2)(e^{i phase_c}|3><2| + h.c.)
Matrix3c hamiltonian(const DriveSample& drive, double detuning);

/// d(rho)/dt = -i[H, rho] plus the population-transfer and transverse decay terms.
/// The result is traceless whenever rho is Hermitian.
Matrix3c derivative(const Matrix3c& rho, const Matrix3c& h, const DecayRates& decays);

/// Piecewise-constant drive: `sample` is constant between consecutive
/// breakpoints (pulse edges).
struct DriveSchedule {
  std::function<DriveSample(double)> sample;
  std::vector<double> breakpoints;
};

/// Fixed RK4 step sizes and the snapshot cadence.
struct StepPlan {
  double dt_pulse = 0.5e-9;
  double dt_idle = 5e-9;
  double sample_interval = 50e-9;

  StepPlan halved() const { return {dt_pulse / 2, dt_idle / 2, sample_interval}; }
  /// Throws ConfigError for non-positive or non-finite entries.
  void validate() const;
};

struct Trajectory {
  double detuning = 0.0;  ///< rad/s
  std::vector<double> times;
  std::vector<DensityMatrix> states;

  const DensityMatrix& final_state() const { return states.back(); }
};

/// Integrates from t0 to t1 with the RK4 stepper. A segment between
/// breakpoints uses dt_pulse when the drive is on and dt_idle otherwise; the
/// step is shrunk so that it tiles the segment exactly. Snapshots are taken at
/// t0 + k * sample_interval and at t1.
///
/// Throws IntegrationDiverged when the trace drifts by more than 1e-4 or a
/// value turns non-finite, ConfigError for a bad step plan or t1 <= t0.
Trajectory propagate(const DensityMatrix& initial, const DriveSchedule& schedule, double detuning,
                     const DecayRates& decays, double t0, double t1, const StepPlan& plan);

struct PhaseSeries {
  std::vector<double> phase;  ///< unwrapped arg(rho_ij), rad
  std::vector<bool> defined;  ///< false where |rho_ij| < 1e-9 (phase carried forward)
};

/// Continuous phase of one element along a trajectory. Throws
/// std::invalid_argument for an element that is not an off-diagonal 1..3 label.
PhaseSeries coherence_phase(const Trajectory& trajectory, Element element);

/// Wrap an angle to (-pi, pi].
double wrap_phase(double angle);

}  // namespace deshell
