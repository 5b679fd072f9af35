#pragma once

// Rectangular optical pulses and the sequences built from them.

#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "deshell/quantum_core.hpp"

namespace deshell {

enum class Transition {
  ground_excited,  ///< |1>-|3>, "1-3": D, W, R
  spin_excited,    ///< |2>-|3>, "2-3": B1, B2
};

std::string_view to_string(Transition transition);
/// Accepts "1-3" or "2-3"; throws ConfigError otherwise.
Transition parse_transition(std::string_view text);

struct Pulse {
  std::string label;
  Transition transition = Transition::ground_excited;
  double start = 0.0;     ///< s
  double duration = 0.0;  ///< s
  double area = 0.0;      ///< rad
  double phase = 0.0;     ///< rad

  double end() const { return start + duration; }
  double rabi() const { return area / duration; }
  /// Half-open activity interval [start, end).
  bool active_at(double t) const { return t >= start && t < end(); }
};

/// Phi = integral of Omega dt; for a rectangular pulse Omega * duration.
double pulse_area(double rabi, double duration);
inline double pulse_area(const Pulse& p) { return pulse_area(p.rabi(), p.duration); }

/// Ordered, validated list of pulses. Immutable once built.
class PulseSequence {
 public:
  PulseSequence() = default;
  /// Sorts by start time and validates: duration > 0, area >= 0, start >= 0,
  /// finite Rabi frequency, no overlap on one transition, every pulse ends by
  /// the horizon. Throws InvalidSequence naming the offending pulse.
  PulseSequence(std::vector<Pulse> pulses, double horizon, std::string name = {});

  const std::vector<Pulse>& pulses() const { return pulses_; }
  double horizon() const { return horizon_; }
  const std::string& name() const { return name_; }

  /// First pulse with this label, or nullptr.
  const Pulse* find(std::string_view label) const;
  /// End of the latest pulse (0 for an empty sequence).
  double last_pulse_end() const;
  /// Every pulse start and end, sorted and deduplicated.
  std::vector<double> edges() const;

 private:
  std::vector<Pulse> pulses_;
  double horizon_ = 0.0;
  std::string name_;
};

/// Sum of the active pulses at time t, per transition.
DriveSample drive_at(const PulseSequence& sequence, double t);
/// Drive function plus pulse edges, ready for propagate().
DriveSchedule drive_schedule(const PulseSequence& sequence);

/// D, W, R timing on |1>-|3> (pulse start times).
struct ThreePulseParams {
  double t_d = 5e-6;
  double t_w = 10e-6;
  double t_r = 51e-6;
  double duration = 100e-9;
  double area = std::numbers::pi / 2;
  double horizon = 60e-6;
};

/// Deshelling pair on |2>-|3>. Each B pulse lasts (area / pi) * duration_per_pi,
/// so both share one Rabi frequency.
struct DeshellingParams {
  double t_b1 = 10.1e-6;
  double t_b2 = 50e-6;
  double area_b1 = std::numbers::pi;
  double area_b2 = 3 * std::numbers::pi;
  double duration_per_pi = 100e-9;
};

/// Conventional stimulated echo. Throws InvalidSequence unless
/// t_d < t_w < t_r with non-overlapping pulses inside the horizon.
PulseSequence build_three_pulse_echo(const ThreePulseParams& params);

/// Stimulated echo with B1, B2 inserted between W and R. Requires W end <= t_b1,
/// B1 end <= t_b2 (InvalidSequence) and B2 end <= t_r (GeometryError).
/// A zero-area B pulse is omitted.
PulseSequence build_locked_echo(const ThreePulseParams& base, const DeshellingParams& deshelling);

/// Parse the JSON sequence format:
///   { "name": str?, "horizon_s": float,
///     "pulses": [ { "label", "transition": "1-3"|"2-3", "start_s", "duration_s",
///                   "area_rad", "phase_rad"? } ] }
/// Errors are ConfigError/InvalidSequence with the line of the offending entry.
PulseSequence parse_sequence_config(std::string_view text);
std::string serialize_sequence_config(const PulseSequence& sequence);
/// Reads and parses a file; a missing file is a ConfigError.
PulseSequence load_sequence_config(const std::filesystem::path& path);

}  // namespace deshell
