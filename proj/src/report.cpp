#include "deshell/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <string>

namespace deshell::report {

using nlohmann::ordered_json;

std::string format_float(double value) {
  if (value == 0.0) value = 0.0;  // no "-0"
  return fmt::format("{:.8e}", value);
}

double round9(double value) { return std::stod(format_float(value)); }

std::string detuning_tag(double detuning) {
  const double khz = detuning / (2 * std::numbers::pi) / 1e3;
  const double rounded = std::round(khz * 1e6) / 1e6;
  return fmt::format("{:g}", rounded == 0.0 ? 0.0 : rounded);
}

void write_timeseries_csv(std::ostream& out, const EnsembleResult& result) {
  std::vector<PhaseSeries> phases;
  out << "t_s,re_P,im_P,abs_P,abs_P_sq";
  for (const auto& traj : result.recorded) {
    const std::string tag = detuning_tag(traj.detuning);
    out << ",rho33_d" << tag << ",phase13_d" << tag;
    phases.push_back(coherence_phase(traj, {1, 3}));
  }
  out << '\n';
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    const Complex p = result.polarization[i];
    out << format_float(result.times[i]) << ',' << format_float(p.real()) << ',' << format_float(p.imag()) << ','
        << format_float(std::abs(p)) << ',' << format_float(std::norm(p));
    for (std::size_t r = 0; r < result.recorded.size(); ++r) {
      out << ',' << format_float(result.recorded[r].states[i].population(3)) << ','
          << format_float(phases[r].phase[i]);
    }
    out << '\n';
  }
}

ordered_json echo_json(const EchoReport& r) {
  ordered_json j;
  j["window_start_s"] = round9(r.window_start);
  j["window_end_s"] = round9(r.window_end);
  j["has_echo"] = r.has_echo;
  j["peak_time_s"] = round9(r.peak_time);
  j["peak_amplitude"] = round9(r.peak_amplitude);
  j["peak_intensity"] = round9(r.peak_intensity);
  if (r.reference_amplitude) {
    j["reference_amplitude"] = round9(*r.reference_amplitude);
    if (auto ratio = r.amplitude_ratio()) j["amplitude_ratio"] = round9(*ratio);
  }
  return j;
}

void write_table1_csv(std::ostream& out, unsigned max_m) {
  out << "n,m,B_nm\n";
  for (const auto& e : leakage::coefficient_table(max_m)) out << e.n << ',' << e.m << ',' << e.value << '\n';
}

void write_fig3_csv(std::ostream& out, const leakage::Fig3Dataset& data, leakage::Fig3Mode mode) {
  out << "eta";
  for (const auto& c : data.curves) out << ",curve_b2_" << c.b2_pi << "pi";
  out << '\n';
  for (std::size_t i = 0; i < data.eta.size(); ++i) {
    out << format_float(data.eta[i]);
    for (const auto& c : data.curves) out << ',' << format_float(c.values(mode)[i]);
    out << '\n';
  }
}

ordered_json predicate_json(unsigned b1_pi, unsigned b2_pi, leakage::Regime regime) {
  const auto poly = leakage::polynomial(regime, b1_pi, b2_pi);
  ordered_json j;
  j["b1_pi"] = b1_pi;
  j["b2_pi"] = b2_pi;
  j["m"] = poly.m;
  j["regime"] = std::string(leakage::to_string(regime));
  j["recovered"] = leakage::is_phase_recovered(b1_pi, b2_pi);
  ordered_json effective = ordered_json::array();
  ordered_json terms = ordered_json::array();
  for (const auto& t : poly.terms) {
    const bool excited = t.residence() == leakage::Residence::excited;
    if (excited && t.echo_effective()) effective.push_back(t.n);
    terms.push_back(ordered_json{{"n", t.n},
                                 {"coefficient", t.coefficient},
                                 {"state", excited ? "|3>" : "|2>"},
                                 {"phase_rad", round9(t.phase())},
                                 {"echo_effective", excited && t.echo_effective()}});
  }
  j["effective_terms"] = std::move(effective);
  j["terms"] = std::move(terms);
  // Diagnostic only: how the eta^4 weight compares between the two regimes.
  if (b1_pi >= 1 && poly.m >= 4) {
    const auto short_c = leakage::short_t_polynomial(b1_pi, b2_pi).coefficient_of(4);
    const auto long_c = leakage::long_t_polynomial(b1_pi, b2_pi).coefficient_of(4);
    j["eta4_coefficient"] = ordered_json{{"short", short_c}, {"long", long_c}};
  }
  return j;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "area_pi,echo_amp,echo_time_s,atom_phase_end_rad,atom_phase_reference_rad,phase_recovered\n";
  for (const auto& r : rows) {
    out << format_float(r.area / std::numbers::pi) << ',' << format_float(r.echo.peak_amplitude) << ','
        << format_float(r.echo.peak_time) << ',' << format_float(r.atom_phase_end) << ','
        << format_float(r.atom_phase_reference) << ',' << (r.phase_recovered ? 1 : 0) << '\n';
  }
}

}  // namespace deshell::report
