#include "deshell/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <exception>
#include <string>
#include <thread>

#include "deshell/errors.hpp"

namespace deshell {

namespace {

constexpr double kNoEcho = 1e-12;
const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs job(i) for i in [0, count) on a small pool. The first failure (by index)
// is rethrown after all workers finish.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = worker_count(threads, count);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

IntegrityStats integrity_of(const Trajectory& traj) {
  IntegrityStats s;
  for (const auto& state : traj.states) {
    s.max_trace_error = std::max(s.max_trace_error, state.trace_error());
    s.max_hermiticity_error = std::max(s.max_hermiticity_error, state.hermiticity_error());
    s.min_eigenvalue = std::min(s.min_eigenvalue, state.min_eigenvalue());
  }
  return s;
}

void merge(IntegrityStats& into, const IntegrityStats& from) {
  into.max_trace_error = std::max(into.max_trace_error, from.max_trace_error);
  into.max_hermiticity_error = std::max(into.max_hermiticity_error, from.max_hermiticity_error);
  into.min_eigenvalue = std::min(into.min_eigenvalue, from.min_eigenvalue);
}

Trajectory propagate_class(const PulseSequence& sequence, const DriveSchedule& schedule, double detuning,
                           const DecayRates& decays, const DensityMatrix& initial, const StepPlan& plan,
                           std::size_t index) {
  try {
    return propagate(initial, schedule, detuning, decays, 0.0, sequence.horizon(), plan);
  } catch (const IntegrationDiverged& e) {
    throw IntegrationDiverged("class " + std::to_string(index) + " (delta/2pi = " +
                              std::to_string(detuning / (2 * std::numbers::pi)) + " Hz): " + e.what());
  }
}

}  // namespace

double DetuningGrid::spacing() const {
  return detunings.size() < 2 ? 0.0 : detunings[1] - detunings[0];
}

double DetuningGrid::recurrence_time() const {
  const double d = spacing();
  return d > 0.0 ? 2 * std::numbers::pi / d : std::numeric_limits<double>::infinity();
}

DetuningGrid DetuningGrid::single(double detuning) { return {{detuning}, {1.0}, 0.0, 0.0}; }

std::size_t minimum_classes(double fwhm, double span_sigmas, double horizon) {
  const double sigma = fwhm / kFwhmPerSigma;
  // spacing = 2 span sigma / (N - 1) < 2 pi / horizon
  const double intervals = 2.0 * span_sigmas * sigma * horizon / (2 * std::numbers::pi);
  auto n = static_cast<std::size_t>(std::floor(intervals)) + 2;
  if (n % 2 == 0) ++n;
  return std::max<std::size_t>(n, 3);
}

DetuningGrid gaussian_grid(double fwhm, std::size_t classes, double span_sigmas, std::optional<double> horizon) {
  if (!(fwhm > 0.0) || !std::isfinite(fwhm)) throw ConfigError("inhomogeneous FWHM must be positive");
  if (classes < 3 || classes % 2 == 0) throw ConfigError("class count must be odd and >= 3");
  if (!(span_sigmas > 0.0) || !std::isfinite(span_sigmas)) throw ConfigError("span_sigmas must be positive");

  const double sigma = fwhm / kFwhmPerSigma;
  const double half = span_sigmas * sigma;
  const auto mid = static_cast<long>(classes / 2);
  DetuningGrid grid;
  grid.fwhm = fwhm;
  grid.span_sigmas = span_sigmas;
  grid.detunings.resize(classes);
  grid.weights.resize(classes);
  const double step = half / static_cast<double>(mid);
  // Built from the centre outwards so +-delta are exact negatives.
  for (long k = 0; k <= mid; ++k) {
    const double d = static_cast<double>(k) * step;
    const double w = std::exp(-0.5 * (d / sigma) * (d / sigma));
    grid.detunings[static_cast<std::size_t>(mid + k)] = d;
    grid.detunings[static_cast<std::size_t>(mid - k)] = -d;
    grid.weights[static_cast<std::size_t>(mid + k)] = w;
    grid.weights[static_cast<std::size_t>(mid - k)] = w;
  }
  // Pairwise-symmetric normalisation sum.
  double total = grid.weights[static_cast<std::size_t>(mid)];
  for (long k = 1; k <= mid; ++k) total += 2.0 * grid.weights[static_cast<std::size_t>(mid + k)];
  for (double& w : grid.weights) w /= total;

  if (horizon && grid.recurrence_time() <= *horizon) {
    throw ConfigError("detuning grid too coarse: recurrence time " + std::to_string(grid.recurrence_time()) +
                      " s does not exceed the horizon " + std::to_string(*horizon) + " s; use at least " +
                      std::to_string(minimum_classes(fwhm, span_sigmas, *horizon)) + " classes");
  }
  return grid;
}

double EnsembleResult::max_abs_polarization() const {
  double m = 0.0;
  for (const auto& p : polarization) m = std::max(m, std::abs(p));
  return m;
}

EnsembleResult run_ensemble(const PulseSequence& sequence, const DetuningGrid& grid, const DecayRates& decays,
                            const DensityMatrix& initial, const StepPlan& plan, const RecordOptions& record) {
  if (grid.classes() == 0 || grid.weights.size() != grid.classes()) {
    throw ConfigError("detuning grid is empty or inconsistent");
  }
  plan.validate();
  decays.validate();
  const DriveSchedule schedule = drive_schedule(sequence);

  const std::size_t classes = grid.classes();
  const std::size_t jobs = classes + record.detunings.size();
  std::vector<std::vector<Complex>> coherence(classes);
  std::vector<IntegrityStats> stats(classes);
  std::vector<Trajectory> recorded(record.detunings.size());
  std::vector<double> times;

  parallel_for(jobs, record.threads, [&](std::size_t i) {
    if (i >= classes) {
      const std::size_t r = i - classes;
      recorded[r] = propagate_class(sequence, schedule, record.detunings[r], decays, initial, plan, i);
      return;
    }
    Trajectory traj = propagate_class(sequence, schedule, grid.detunings[i], decays, initial, plan, i);
    stats[i] = integrity_of(traj);
    auto& series = coherence[i];
    series.reserve(traj.states.size());
    for (const auto& s : traj.states) series.push_back(s(1, 3));
    if (i == 0) times = std::move(traj.times);
  });

  EnsembleResult result;
  result.times = std::move(times);
  result.polarization.assign(result.times.size(), Complex(0.0));
  for (std::size_t k = 0; k < classes; ++k) {
    const double w = grid.weights[k];
    for (std::size_t t = 0; t < result.times.size(); ++t) result.polarization[t] += w * coherence[k][t];
    merge(result.integrity, stats[k]);
  }
  result.recorded = std::move(recorded);
  result.setup = {sequence, grid, decays, plan};
  return result;
}

std::optional<double> EchoReport::amplitude_ratio() const {
  if (!reference_amplitude || *reference_amplitude == 0.0) return std::nullopt;
  return peak_amplitude / *reference_amplitude;
}

std::pair<double, double> default_echo_window(const PulseSequence& sequence) {
  const Pulse* read = sequence.find("R");
  const double after = read ? read->start + 1e-6 : sequence.last_pulse_end();
  return {std::max(after, sequence.last_pulse_end()), sequence.horizon()};
}

EchoReport echo_metrics(const EnsembleResult& result, double window_start, double window_end) {
  if (result.times.empty()) throw ConfigError("echo window: ensemble result has no samples");
  if (!(window_end > window_start)) throw ConfigError("echo window is empty");
  const double slack = 1e-12;
  if (window_start < result.times.front() - slack || window_end > result.times.back() + slack) {
    throw ConfigError("echo window lies outside the simulated time span");
  }
  for (const auto& p : result.setup.sequence.pulses()) {
    if (p.start < window_end && window_start < p.end()) {
      throw ConfigError("echo window overlaps pulse '" + p.label + "'");
    }
  }

  const auto& t = result.times;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window_start - slack || t[i] > window_end + slack) continue;
    if (!best || std::abs(result.polarization[i]) > std::abs(result.polarization[*best])) best = i;
  }
  if (!best) throw ConfigError("echo window contains no samples");

  EchoReport report;
  report.window_start = window_start;
  report.window_end = window_end;
  const std::size_t i = *best;
  const double y0 = std::abs(result.polarization[i]);
  if (y0 < kNoEcho) {
    report.peak_time = window_start;
    return report;
  }
  report.has_echo = true;
  report.peak_time = t[i];
  report.peak_amplitude = y0;
  if (i > 0 && i + 1 < t.size()) {
    const double ym = std::abs(result.polarization[i - 1]);
    const double yp = std::abs(result.polarization[i + 1]);
    const double curvature = ym - 2.0 * y0 + yp;
    if (curvature < 0.0) {
      const double offset = std::clamp(0.5 * (ym - yp) / curvature, -1.0, 1.0);
      const double dt = 0.5 * (t[i + 1] - t[i - 1]);
      report.peak_time = std::clamp(t[i] + offset * dt, window_start, window_end);
      report.peak_amplitude = y0 - 0.25 * (ym - yp) * offset;
    }
  }
  report.peak_intensity = report.peak_amplitude * report.peak_amplitude;
  return report;
}

PulseSequence with_b2_area(const PulseSequence& base, double area) {
  if (!(area > 0.0) || !std::isfinite(area)) throw InvalidSequence("B2 area must be positive");
  const Pulse* b2 = base.find("B2");
  const Pulse* read = base.find("R");
  if (!b2 || !base.find("B1") || !read) throw InvalidSequence("B2 sweep needs a sequence with B1, B2 and R pulses");
  const double duration = area / b2->rabi();
  if (b2->start + duration > read->start + 1e-15) {
    throw GeometryError("B2 area " + std::to_string(area / std::numbers::pi) + " pi lasts " +
                        std::to_string(duration) + " s and would overlap R");
  }
  std::vector<Pulse> pulses = base.pulses();
  for (auto& p : pulses) {
    if (p.label == "B2") {
      p.duration = duration;
      p.area = area;
    }
  }
  return PulseSequence(std::move(pulses), base.horizon(), base.name());
}

std::vector<SweepRow> sweep_b2_area(const PulseSequence& base, std::span<const double> areas,
                                    const DetuningGrid& grid, const DecayRates& decays,
                                    const DensityMatrix& initial, const StepPlan& plan,
                                    const SweepOptions& options) {
  std::vector<PulseSequence> sequences;
  sequences.reserve(areas.size());
  for (double area : areas) sequences.push_back(with_b2_area(base, area));

  std::vector<SweepRow> rows;
  rows.reserve(areas.size());
  for (std::size_t k = 0; k < areas.size(); ++k) {
    const PulseSequence& seq = sequences[k];
    const Pulse& b1 = *seq.find("B1");
    const Pulse& b2 = *seq.find("B2");

    SweepRow row;
    row.area = areas[k];
    const EnsembleResult ensemble = run_ensemble(seq, grid, decays, initial, plan, {{}, options.threads});
    const auto [wa, wb] = options.window.value_or(default_echo_window(seq));
    row.echo = echo_metrics(ensemble, wa, wb);

    // Single atom: up to the start of B1, then through the end of B2.
    const double delta = options.atom_detuning;
    const DriveSchedule schedule = drive_schedule(seq);
    const auto before = propagate(initial, schedule, delta, decays, 0.0, b1.start, plan);
    const auto after = propagate(before.final_state(), schedule, delta, decays, b1.start, b2.end(), plan);
    const Complex c0 = before.final_state()(1, 3);
    const Complex c1 = after.final_state()(1, 3);
    row.atom_rho33_pre_b1 = before.final_state().population(3);
    row.atom_rho33_end = after.final_state().population(3);
    row.atom_phase_end = std::arg(c1);
    // The atom spends on average half of each deshelling pulse in |3>.
    row.atom_phase_reference = wrap_phase(std::arg(c0) + delta * 0.5 * (b1.duration + b2.duration));
    row.atom_coherence_ratio = std::abs(c0) > 0.0 ? std::abs(c1) / std::abs(c0) : 0.0;
    row.phase_recovered = row.atom_coherence_ratio >= 0.5 &&
                          std::abs(wrap_phase(row.atom_phase_end - row.atom_phase_reference)) <= options.phase_tolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace deshell
