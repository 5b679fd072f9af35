#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <numbers>

#include "deshell/ensemble.hpp"
#include "deshell/errors.hpp"
#include "deshell/leakage.hpp"
#include "deshell/pulse_program.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace deshell;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// Run settings in the units the CLI takes (Hz, seconds).
struct Settings {
  std::size_t classes = 257;
  double span_sigmas = 3.0;
  double fwhm_hz = 680e3;
  double optical_decay_hz = 2e3;
  double spin_decay_hz = 0.0;
  double dt_pulse = 0.5e-9;
  double dt_idle = 5e-9;
  double sample_interval = 50e-9;
  std::size_t threads = 0;

  DecayRates decays() const {
    DecayRates d = DecayRates::optical(kTwoPi * optical_decay_hz);
    d.population_21 = d.coherence_21 = kTwoPi * spin_decay_hz;
    return d;
  }
  StepPlan plan() const { return {dt_pulse, dt_idle, sample_interval}; }
  DetuningGrid grid(double horizon) const { return gaussian_grid(kTwoPi * fwhm_hz, classes, span_sigmas, horizon); }
};

#define DESHELL_SETTINGS_ARGS                                                                                     \
  "classes"_a = 257, "span_sigmas"_a = 3.0, "fwhm_hz"_a = 680e3, "optical_decay_hz"_a = 2e3,                     \
      "spin_decay_hz"_a = 0.0, "dt_pulse"_a = 0.5e-9, "dt_idle"_a = 5e-9, "sample_interval"_a = 50e-9,            \
      "threads"_a = 0

py::dict echo_dict(const EchoReport& e) {
  py::dict d("window_start_s"_a = e.window_start, "window_end_s"_a = e.window_end, "has_echo"_a = e.has_echo,
             "peak_time_s"_a = e.peak_time, "peak_amplitude"_a = e.peak_amplitude,
             "peak_intensity"_a = e.peak_intensity);
  return d;
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<std::complex<double>> states_array(const Trajectory& t) {
  py::array_t<std::complex<double>> out({t.states.size(), std::size_t{3}, std::size_t{3}});
  auto a = out.mutable_unchecked<3>();
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(k, i, j) = t.states[k].matrix()(i, j);
  }
  return out;
}

py::dict simulate(const PulseSequence& seq, const std::vector<double>& record_hz,
                  std::optional<std::pair<double, double>> window, const Settings& s) {
  RecordOptions record;
  record.threads = s.threads;
  for (double hz : record_hz) record.detunings.push_back(kTwoPi * hz);
  const DetuningGrid grid = s.grid(seq.horizon());
  EnsembleResult r;
  {
    py::gil_scoped_release release;
    r = run_ensemble(seq, grid, s.decays(), DensityMatrix::ground(), s.plan(), record);
  }
  const auto [a, b] = window.value_or(default_echo_window(seq));
  py::dict recorded;
  for (std::size_t k = 0; k < r.recorded.size(); ++k) {
    const auto phase = coherence_phase(r.recorded[k], {1, 3});
    recorded[py::float_(record_hz[k])] = py::dict("rho"_a = states_array(r.recorded[k]),
                                                  "phase13"_a = to_array(phase.phase));
  }
  return py::dict("times"_a = to_array(r.times), "polarization"_a = to_array(r.polarization), "recorded"_a = recorded,
                  "echo"_a = echo_dict(echo_metrics(r, a, b)),
                  "integrity"_a = py::dict("max_trace_error"_a = r.integrity.max_trace_error,
                                           "max_hermiticity_error"_a = r.integrity.max_hermiticity_error,
                                           "min_eigenvalue"_a = r.integrity.min_eigenvalue));
}

leakage::Regime regime_of(const std::string& text) { return leakage::parse_regime(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Three-level photon-echo deshelling simulator and leakage model";
  m.attr("__version__") = DESHELL_VERSION;

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto config = py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  auto invalid = py::register_exception<InvalidSequence>(m, "InvalidSequence", config.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", invalid.ptr());
  py::register_exception<IntegrationDiverged>(m, "IntegrationDiverged", error.ptr());

  // Pulse programs ----------------------------------------------------------

  py::class_<Pulse>(m, "Pulse")
      .def_readonly("label", &Pulse::label)
      .def_property_readonly("transition", [](const Pulse& p) { return std::string(to_string(p.transition)); })
      .def_readonly("start", &Pulse::start)
      .def_readonly("duration", &Pulse::duration)
      .def_readonly("area", &Pulse::area)
      .def_readonly("phase", &Pulse::phase)
      .def_property_readonly("end", &Pulse::end)
      .def_property_readonly("rabi", &Pulse::rabi)
      .def("__repr__", [](const Pulse& p) {
        return "<Pulse " + p.label + " " + std::string(to_string(p.transition)) + " start=" +
               std::to_string(p.start) + ">";
      });

  py::class_<PulseSequence>(m, "PulseSequence")
      .def_property_readonly("pulses", &PulseSequence::pulses)
      .def_property_readonly("horizon", &PulseSequence::horizon)
      .def_property_readonly("name", &PulseSequence::name)
      .def("find", [](const PulseSequence& s, const std::string& label) -> std::optional<Pulse> {
        const Pulse* p = s.find(label);
        return p ? std::optional<Pulse>(*p) : std::nullopt;
      })
      .def("to_json", &serialize_sequence_config)
      .def("__len__", [](const PulseSequence& s) { return s.pulses().size(); });

  m.def("parse_sequence", [](const std::string& text) { return parse_sequence_config(text); }, "text"_a);
  m.def("load_sequence", &load_sequence_config, "path"_a);
  m.def(
      "three_pulse_echo",
      [](double t_d, double t_w, double t_r, double duration, double area, double horizon) {
        return build_three_pulse_echo({t_d, t_w, t_r, duration, area, horizon});
      },
      "t_d"_a = 5e-6, "t_w"_a = 10e-6, "t_r"_a = 51e-6, "duration"_a = 100e-9, "area"_a = std::numbers::pi / 2,
      "horizon"_a = 60e-6);
  m.def(
      "locked_echo",
      [](double t_b1, double t_b2, double area_b1, double area_b2, double duration_per_pi, double t_d, double t_w,
         double t_r, double duration, double area, double horizon) {
        return build_locked_echo({t_d, t_w, t_r, duration, area, horizon},
                                 {t_b1, t_b2, area_b1, area_b2, duration_per_pi});
      },
      "t_b1"_a = 10.1e-6, "t_b2"_a = 50e-6, "area_b1"_a = std::numbers::pi, "area_b2"_a = 3 * std::numbers::pi,
      "duration_per_pi"_a = 100e-9, "t_d"_a = 5e-6, "t_w"_a = 10e-6, "t_r"_a = 51e-6, "duration"_a = 100e-9,
      "area"_a = std::numbers::pi / 2, "horizon"_a = 60e-6);

  // Ensemble ----------------------------------------------------------------

  m.def(
      "simulate",
      [](const PulseSequence& seq, std::vector<double> record_detunings_hz,
         std::optional<std::pair<double, double>> window, std::size_t classes, double span_sigmas, double fwhm_hz,
         double optical_decay_hz, double spin_decay_hz, double dt_pulse, double dt_idle, double sample_interval,
         std::size_t threads) {
        return simulate(seq, record_detunings_hz, window,
                        {classes, span_sigmas, fwhm_hz, optical_decay_hz, spin_decay_hz, dt_pulse, dt_idle,
                         sample_interval, threads});
      },
      "sequence"_a, "record_detunings_hz"_a = std::vector<double>{}, "window"_a = py::none(), DESHELL_SETTINGS_ARGS,
      "Run the detuning ensemble; returns times, polarization, echo, integrity and recorded classes.");

  m.def(
      "sweep_b2",
      [](const PulseSequence& base, const std::vector<double>& areas_pi, std::size_t classes, double span_sigmas,
         double fwhm_hz, double optical_decay_hz, double spin_decay_hz, double dt_pulse, double dt_idle,
         double sample_interval, std::size_t threads) {
        const Settings s{classes, span_sigmas, fwhm_hz, optical_decay_hz, spin_decay_hz,
                         dt_pulse, dt_idle,     sample_interval, threads};
        std::vector<double> areas;
        for (double a : areas_pi) areas.push_back(a * std::numbers::pi);
        SweepOptions options;
        options.threads = threads;
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = sweep_b2_area(base, areas, s.grid(base.horizon()), s.decays(), DensityMatrix::ground(), s.plan(),
                               options);
        }
        py::list out;
        for (const auto& r : rows) {
          out.append(py::dict("area_pi"_a = r.area / std::numbers::pi, "echo"_a = echo_dict(r.echo),
                              "atom_phase_end_rad"_a = r.atom_phase_end,
                              "atom_phase_reference_rad"_a = r.atom_phase_reference,
                              "atom_rho33_pre_b1"_a = r.atom_rho33_pre_b1, "atom_rho33_end"_a = r.atom_rho33_end,
                              "phase_recovered"_a = r.phase_recovered));
        }
        return out;
      },
      "sequence"_a, "areas_pi"_a, DESHELL_SETTINGS_ARGS);

  // Leakage model -----------------------------------------------------------

  m.def("coefficient", &leakage::coefficient, "n"_a, "m"_a);
  m.def(
      "coefficient_table",
      [](unsigned max_m) {
        std::vector<std::tuple<unsigned, unsigned, leakage::Coefficient>> out;
        for (const auto& e : leakage::coefficient_table(max_m)) out.emplace_back(e.n, e.m, e.value);
        return out;
      },
      "max_m"_a = 10);
  m.def(
      "eta_from_depth",
      [](double depth, bool literal) {
        return leakage::eta_from_depth(depth, literal ? leakage::EtaConvention::literal_exp
                                                      : leakage::EtaConvention::transferred_fraction);
      },
      "depth"_a, "literal"_a = false);
  m.def(
      "populations",
      [](unsigned b1, unsigned b2, double eta, const std::string& regime, double amplitude) {
        const auto p = regime_of(regime) == leakage::Regime::short_t
                           ? leakage::populations_short_t(b1, b2, eta, amplitude)
                           : leakage::populations_long_t(b1, b2, eta, amplitude);
        return py::make_tuple(p.rho33, p.rho22);
      },
      "b1_pi"_a, "b2_pi"_a, "eta"_a, "regime"_a = "short", "amplitude"_a = 1.0, "Returns (rho33, rho22).");
  m.def(
      "polynomial_terms",
      [](unsigned b1, unsigned b2, const std::string& regime) {
        py::list out;
        for (const auto& t : leakage::polynomial(regime_of(regime), b1, b2).terms) {
          out.append(py::dict("n"_a = t.n, "coefficient"_a = t.coefficient,
                              "state"_a = t.residence() == leakage::Residence::excited ? "33" : "22",
                              "phase_rad"_a = leakage::term_phase(t.n),
                              "echo_effective"_a = leakage::is_echo_effective(t.n)));
        }
        return out;
      },
      "b1_pi"_a, "b2_pi"_a, "regime"_a = "short");
  m.def(
      "echo_effective_amplitude",
      [](unsigned b1, unsigned b2, double eta, const std::string& regime, bool include_zeroth) {
        return leakage::echo_effective_amplitude(leakage::polynomial(regime_of(regime), b1, b2), eta,
                                                 include_zeroth);
      },
      "b1_pi"_a, "b2_pi"_a, "eta"_a, "regime"_a = "short", "include_zeroth"_a = true);
  m.def("is_phase_recovered", &leakage::is_phase_recovered, "b1_pi"_a, "b2_pi"_a);
  m.def(
      "figure3",
      [](unsigned b1, const std::vector<unsigned>& b2, const std::vector<double>& eta, const std::string& regime) {
        const auto data = leakage::figure3_dataset(b1, b2, eta, regime_of(regime));
        py::dict out;
        for (const auto& c : data.curves) {
          out[py::int_(c.b2_pi)] =
              py::dict("total"_a = to_array(c.total), "effective"_a = to_array(c.effective),
                       "effective_no_zeroth"_a = to_array(c.effective_no_zeroth));
        }
        return out;
      },
      "b1_pi"_a, "b2_pi"_a, "eta"_a, "regime"_a = "short");
}
