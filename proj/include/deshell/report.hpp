#pragma once

// Dataset emitters. Every float goes through format_float so reruns diff clean.

#include <json.hpp>
#include <ostream>
#include <span>
#include <string>

#include "deshell/ensemble.hpp"
#include "deshell/leakage.hpp"

namespace deshell::report {

/// Scientific notation, 9 significant digits: "5.60000000e-05".
std::string format_float(double value);
/// value rounded to 9 significant digits, for JSON output.
double round9(double value);

/// Column tag for a detuning in rad/s: delta / 2pi in kHz, e.g. "30", "-30", "12.5".
std::string detuning_tag(double detuning);

/// t_s, re_P, im_P, abs_P, abs_P_sq, then rho33_d<kHz>, phase13_d<kHz> per recorded class.
void write_timeseries_csv(std::ostream& out, const EnsembleResult& result);

nlohmann::ordered_json echo_json(const EchoReport& report);

/// n, m, B_nm ordered by n then m.
void write_table1_csv(std::ostream& out, unsigned max_m);

/// eta, curve_b2_<k>pi, ... for one mode.
void write_fig3_csv(std::ostream& out, const leakage::Fig3Dataset& data, leakage::Fig3Mode mode);

/// Phase-recovery verdict with the effective-term list.
nlohmann::ordered_json predicate_json(unsigned b1_pi, unsigned b2_pi, leakage::Regime regime);

/// area_pi, echo_amp, echo_time_s, atom_phase_end_rad, atom_phase_reference_rad, phase_recovered
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace deshell::report
