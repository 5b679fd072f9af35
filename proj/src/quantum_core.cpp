#include "deshell/quantum_core.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "deshell/errors.hpp"

namespace deshell {

namespace {

constexpr double kConstructionTolerance = 1e-12;
constexpr double kTraceDivergence = 1e-4;
constexpr double kPhaseFloor = 1e-9;

bool finite_matrix(const Matrix3c& m) {
  for (int i = 0; i < 9; ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
  }
  return true;
}

double hermiticity(const Matrix3c& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

DensityMatrix::DensityMatrix() : rho_(Matrix3c::Zero()) { rho_(0, 0) = 1.0; }

DensityMatrix::DensityMatrix(const Matrix3c& rho) : rho_(rho) {
  if (!finite_matrix(rho)) throw std::invalid_argument("density matrix has non-finite entries");
  if (hermiticity(rho) > kConstructionTolerance) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  if (std::abs(rho.trace() - Complex(1.0)) > kConstructionTolerance) {
    throw std::invalid_argument("density matrix trace differs from 1");
  }
}

DensityMatrix DensityMatrix::pure(const Vector3c& psi) {
  if (std::abs(psi.norm() - 1.0) > kConstructionTolerance) {
    throw std::invalid_argument("state vector is not normalised");
  }
  Matrix3c rho = psi * psi.adjoint();
  // Enforce exact Hermiticity on the diagonal.
  for (int i = 0; i < 3; ++i) rho(i, i) = rho(i, i).real();
  return DensityMatrix(rho);
}

DensityMatrix DensityMatrix::unchecked(const Matrix3c& rho) {
  DensityMatrix out;
  out.rho_ = rho;
  return out;
}

double DensityMatrix::trace_error() const { return std::abs(rho_.trace() - Complex(1.0)); }

double DensityMatrix::hermiticity_error() const { return hermiticity(rho_); }

double DensityMatrix::min_eigenvalue() const {
  const Matrix3c herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix3c> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DecayRates::validate() const {
  for (double r : {population_31, population_32, population_21, coherence_31, coherence_32, coherence_21}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("decay rates must be finite and non-negative");
  }
}

void StepPlan::validate() const {
  for (double v : {dt_pulse, dt_idle, sample_interval}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError("step plan entries (dt_pulse, dt_idle, sample_interval) must be positive");
    }
  }
}

Matrix3c hamiltonian(const DriveSample& drive, double detuning) {
  Matrix3c h = Matrix3c::Zero();
  h(2, 2) = detuning;
  const Complex p = -0.5 * drive.rabi_p * std::polar(1.0, drive.phase_p);
  const Complex c = -0.5 * drive.rabi_c * std::polar(1.0, drive.phase_c);
  h(2, 0) = p;
  h(0, 2) = std::conj(p);
  h(2, 1) = c;
  h(1, 2) = std::conj(c);
  return h;
}

Matrix3c derivative(const Matrix3c& rho, const Matrix3c& h, const DecayRates& g) {
  const Complex minus_i(0.0, -1.0);
  Matrix3c d = minus_i * (h * rho - rho * h);

  const double out3 = g.population_31 + g.population_32;
  d(2, 2) -= out3 * rho(2, 2);
  d(0, 0) += g.population_31 * rho(2, 2) + g.population_21 * rho(1, 1);
  d(1, 1) += g.population_32 * rho(2, 2) - g.population_21 * rho(1, 1);

  d(0, 2) -= g.coherence_31 * rho(0, 2);
  d(2, 0) -= g.coherence_31 * rho(2, 0);
  d(1, 2) -= g.coherence_32 * rho(1, 2);
  d(2, 1) -= g.coherence_32 * rho(2, 1);
  d(0, 1) -= g.coherence_21 * rho(0, 1);
  d(1, 0) -= g.coherence_21 * rho(1, 0);
  return d;
}

namespace {

struct Breakpoint {
  double t;
  bool sample;
};

// Merged, sorted integration breakpoints on [t0, t1].
std::vector<Breakpoint> breakpoints_for(const DriveSchedule& schedule, double t0, double t1,
                                        const StepPlan& plan) {
  const double merge = 1e-3 * std::min({plan.dt_pulse, plan.dt_idle, plan.sample_interval});
  std::vector<Breakpoint> points;
  for (long k = 1;; ++k) {
    const double t = t0 + static_cast<double>(k) * plan.sample_interval;
    if (t >= t1 - merge) break;
    points.push_back({t, true});
  }
  points.push_back({t1, true});
  for (double t : schedule.breakpoints) {
    if (t > t0 + merge && t < t1 - merge) points.push_back({t, false});
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const Breakpoint& a, const Breakpoint& b) { return a.t < b.t; });

  std::vector<Breakpoint> merged;
  for (const auto& p : points) {
    if (!merged.empty() && p.t - merged.back().t < merge) {
      // Keep the sample grid exact when an edge coincides with a sample.
      if (p.sample && !merged.back().sample) merged.back() = p;
      merged.back().sample = merged.back().sample || p.sample;
      continue;
    }
    merged.push_back(p);
  }
  return merged;
}

void rk4_step(Matrix3c& rho, const Matrix3c& h, const DecayRates& g, double dt) {
  const Matrix3c k1 = derivative(rho, h, g);
  const Matrix3c k2 = derivative(rho + (0.5 * dt) * k1, h, g);
  const Matrix3c k3 = derivative(rho + (0.5 * dt) * k2, h, g);
  const Matrix3c k4 = derivative(rho + dt * k3, h, g);
  rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory propagate(const DensityMatrix& initial, const DriveSchedule& schedule, double detuning,
                     const DecayRates& decays, double t0, double t1, const StepPlan& plan) {
  plan.validate();
  decays.validate();
  if (!(t1 > t0)) throw ConfigError("propagation needs t1 > t0");
  if (!std::isfinite(detuning)) throw ConfigError("detuning must be finite");

  const auto points = breakpoints_for(schedule, t0, t1, plan);
  Trajectory traj;
  traj.detuning = detuning;
  traj.times.reserve(points.size());
  traj.states.reserve(points.size());
  traj.times.push_back(t0);
  traj.states.push_back(initial);

  Matrix3c rho = initial.matrix();
  double a = t0;
  for (const auto& point : points) {
    const double b = point.t;
    const DriveSample drive = schedule.sample ? schedule.sample(0.5 * (a + b)) : DriveSample{};
    const Matrix3c h = hamiltonian(drive, detuning);
    const double dt = drive.is_zero() ? plan.dt_idle : plan.dt_pulse;
    const auto steps = std::max<long>(1, static_cast<long>(std::ceil((b - a) / dt - 1e-9)));
    const double step = (b - a) / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) rk4_step(rho, h, decays, step);

    // RK4 conserves the trace exactly, so an unstable step shows up first as
    // entries leaving the unit box; both are treated as divergence.
    const double drift = std::abs(rho.trace() - Complex(1.0));
    const double largest = rho.cwiseAbs().maxCoeff();
    const double lowest = rho.diagonal().real().minCoeff();
    if (!finite_matrix(rho) || !(drift <= kTraceDivergence) || largest > 1.0 + kTraceDivergence ||
        lowest < -kTraceDivergence) {
      throw IntegrationDiverged("integration diverged at t = " + std::to_string(b) +
                                " s (trace drift " + std::to_string(drift) + "); reduce the step size");
    }
    if (point.sample) {
      traj.times.push_back(b);
      traj.states.push_back(DensityMatrix::unchecked(rho));
    }
    a = b;
  }
  return traj;
}

double wrap_phase(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(angle, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

PhaseSeries coherence_phase(const Trajectory& trajectory, Element element) {
  const auto valid = [](int k) { return k >= 1 && k <= 3; };
  if (!valid(element.row) || !valid(element.col) || element.row == element.col) {
    throw std::invalid_argument("coherence_phase needs an off-diagonal element rho_ij with i, j in 1..3");
  }
  PhaseSeries out;
  out.phase.reserve(trajectory.states.size());
  out.defined.reserve(trajectory.states.size());
  double unwrapped = 0.0;
  double last_raw = 0.0;
  bool seen = false;
  for (const auto& state : trajectory.states) {
    const Complex z = state(element.row, element.col);
    const bool defined = std::abs(z) >= kPhaseFloor;
    if (defined) {
      const double raw = std::arg(z);
      unwrapped = seen ? unwrapped + wrap_phase(raw - last_raw) : raw;
      last_raw = raw;
      seen = true;
    }
    out.phase.push_back(unwrapped);
    out.defined.push_back(defined);
  }
  return out;
}

}  // namespace deshell
