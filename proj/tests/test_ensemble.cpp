#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "deshell/ensemble.hpp"
#include "deshell/errors.hpp"

using namespace deshell;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * std::numbers::pi;
const double kFwhm = kTwoPi * 680e3;
const DecayRates kDecays = DecayRates::optical(kTwoPi * 2e3);

const DetuningGrid& fig2_grid() {
  static const DetuningGrid grid = gaussian_grid(kFwhm, 257, 3.0, 60e-6);
  return grid;
}

const EnsembleResult& conventional() {
  static const EnsembleResult r =
      run_ensemble(build_three_pulse_echo({}), fig2_grid(), kDecays, DensityMatrix(), {});
  return r;
}

const EnsembleResult& locked() {
  static const EnsembleResult r =
      run_ensemble(build_locked_echo({}, {}), fig2_grid(), kDecays, DensityMatrix(), {});
  return r;
}

}  // namespace

TEST_CASE("gaussian grid") {
  const auto& g = fig2_grid();
  const double sigma = kFwhm / (2 * std::sqrt(2 * std::log(2.0)));
  CHECK(g.classes() == 257);
  CHECK(g.spacing() == doctest::Approx(6 * sigma / 256));
  CHECK(g.recurrence_time() == doctest::Approx(kTwoPi / g.spacing()));
  CHECK(g.recurrence_time() == doctest::Approx(147.8e-6).epsilon(1e-3));
  CHECK(std::accumulate(g.weights.begin(), g.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < g.classes(); ++k) {
    CHECK(g.detunings[k] == -g.detunings[g.classes() - 1 - k]);
    CHECK(g.weights[k] == g.weights[g.classes() - 1 - k]);
  }
  CHECK(g.detunings[128] == 0.0);
  CHECK(g.detunings.back() == doctest::Approx(3 * sigma));
  CHECK(g.weights.back() / g.weights[128] == doctest::Approx(std::exp(-4.5)));

  const auto three = gaussian_grid(kFwhm, 3, 3.0);
  CHECK(three.detunings[0] == doctest::Approx(-3 * sigma));
  CHECK(three.detunings[1] == 0.0);

  CHECK_THROWS_AS(gaussian_grid(kFwhm, 256, 3.0), ConfigError);
  CHECK_THROWS_AS(gaussian_grid(kFwhm, 1, 3.0), ConfigError);
  CHECK_THROWS_AS(gaussian_grid(kFwhm, 257, 0.0), ConfigError);
  CHECK_THROWS_AS(gaussian_grid(0.0, 257, 3.0), ConfigError);

  SUBCASE("aliasing guard") {
    CHECK_THROWS_AS(gaussian_grid(kFwhm, 65, 3.0, 60e-6), ConfigError);
    const std::size_t n = minimum_classes(kFwhm, 3.0, 60e-6);
    CHECK(n % 2 == 1);
    CHECK(gaussian_grid(kFwhm, n, 3.0).recurrence_time() > 60e-6);
    CHECK(gaussian_grid(kFwhm, n - 2, 3.0).recurrence_time() <= 60e-6);
    try {
      gaussian_grid(kFwhm, 65, 3.0, 60e-6);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(std::to_string(n)) != std::string::npos);
    }
  }
}

TEST_CASE("single class, pi pulse") {
  const PulseSequence seq({{"P", Transition::ground_excited, 0.0, 100e-9, kPi, 0.0}}, 200e-9);
  const auto r = run_ensemble(seq, DetuningGrid::single(0.0), {}, DensityMatrix(), {0.5e-9, 5e-9, 50e-9});
  REQUIRE(r.times.size() == 5);
  CHECK(r.times[1] == doctest::Approx(50e-9));
  CHECK(std::abs(r.polarization[1]) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(r.polarization[2]) <= 1e-6);
}

TEST_CASE("conventional stimulated echo") {
  const auto& r = conventional();
  const auto [a, b] = default_echo_window(r.setup.sequence);
  CHECK(a == doctest::Approx(52e-6));
  CHECK(b == doctest::Approx(60e-6));
  const auto echo = echo_metrics(r, a, b);
  CHECK(echo.has_echo);
  CHECK(std::abs(echo.peak_time - 56e-6) <= 0.2e-6);
  CHECK(echo.peak_intensity == doctest::Approx(echo.peak_amplitude * echo.peak_amplitude));
  CHECK(r.max_abs_polarization() <= 0.5 + 1e-9);
  CHECK(r.integrity.max_trace_error <= 1e-6);
  CHECK(r.integrity.max_hermiticity_error <= 1e-9);
  CHECK(r.integrity.min_eigenvalue >= -1e-6);
}

TEST_CASE("locked echo is stronger than the conventional one") {
  const auto [a, b] = default_echo_window(locked().setup.sequence);
  const auto lock = echo_metrics(locked(), a, b);
  const auto conv = echo_metrics(conventional(), a, b);
  CHECK(lock.has_echo);
  CHECK(std::abs(lock.peak_time - 56e-6) <= 0.2e-6);
  CHECK(lock.peak_amplitude >= conv.peak_amplitude);
  CHECK(locked().max_abs_polarization() <= 0.5 + 1e-9);
}

TEST_CASE("polarization of a symmetric grid is imaginary") {
  for (const auto* r : {&conventional(), &locked()}) {
    const double scale = r->max_abs_polarization();
    double worst = 0.0;
    for (const auto& p : r->polarization) worst = std::max(worst, std::abs(p.real()));
    CHECK(worst <= 1e-9 * scale);
  }
}

TEST_CASE("thread count does not change the result") {
  const auto seq = build_locked_echo({}, {});
  const auto grid = gaussian_grid(kFwhm, 31, 3.0);
  StepPlan plan{0.5e-9, 5e-9, 250e-9};
  RecordOptions one{{kTwoPi * 30e3}, 1};
  RecordOptions four{{kTwoPi * 30e3}, 4};
  const auto a = run_ensemble(seq, grid, kDecays, DensityMatrix(), plan, one);
  const auto b = run_ensemble(seq, grid, kDecays, DensityMatrix(), plan, four);
  CHECK(a.polarization == b.polarization);
  REQUIRE(a.recorded.size() == 1);
  CHECK(a.recorded[0].detuning == kTwoPi * 30e3);
  CHECK(a.recorded[0].final_state().matrix() == b.recorded[0].final_state().matrix());
}

TEST_CASE("echo metrics") {
  const auto& r = conventional();
  CHECK_THROWS_AS(echo_metrics(r, 55e-6, 55e-6), ConfigError);
  CHECK_THROWS_AS(echo_metrics(r, 52e-6, 61e-6), ConfigError);
  CHECK_THROWS_AS(echo_metrics(r, 50e-6, 55e-6), ConfigError);  // covers R
  const auto e = echo_metrics(r, 52e-6, 60e-6);
  CHECK_FALSE(e.reference_amplitude);
  CHECK_FALSE(e.amplitude_ratio());

  SUBCASE("nothing to find") {
    const PulseSequence empty({}, 10e-6);
    const auto quiet = run_ensemble(empty, gaussian_grid(kFwhm, 31, 3.0), kDecays, DensityMatrix(), {});
    const auto none = echo_metrics(quiet, 1e-6, 10e-6);
    CHECK_FALSE(none.has_echo);
    CHECK(none.peak_amplitude == 0.0);
  }
}

TEST_CASE("B2 area sweep") {
  const auto base = build_locked_echo({}, {});
  const auto grid = gaussian_grid(kFwhm, 129, 3.0, 60e-6);
  SUBCASE("only 3pi and 7pi recover the phase") {
    const std::vector<double> areas{1 * kPi, 2 * kPi, 3 * kPi, 4 * kPi, 5 * kPi, 7 * kPi};
    const auto rows = sweep_b2_area(base, areas, grid, kDecays, DensityMatrix(), {});
    REQUIRE(rows.size() == areas.size());
    for (const auto& row : rows) {
      const int k = static_cast<int>(std::lround(row.area / kPi));
      CAPTURE(k);
      CHECK(row.phase_recovered == (k == 3 || k == 7));
      if (k == 3 || k == 7) {
        CHECK(std::abs(wrap_phase(row.atom_phase_end - row.atom_phase_reference)) <= 0.05);
        CHECK(row.atom_rho33_end >= 0.9 * row.atom_rho33_pre_b1);
      }
      CHECK(row.echo.has_echo);
    }
  }
  SUBCASE("empty list") {
    CHECK(sweep_b2_area(base, std::vector<double>{}, grid, kDecays, DensityMatrix(), {}).empty());
  }
  SUBCASE("B2 into R fails before any run") {
    const std::vector<double> areas{3 * kPi, 40 * kPi};
    CHECK_THROWS_AS(sweep_b2_area(base, areas, grid, kDecays, DensityMatrix(), {}), GeometryError);
    CHECK_THROWS_AS(with_b2_area(base, 0.0), InvalidSequence);
    CHECK_THROWS_AS(with_b2_area(build_three_pulse_echo({}), 3 * kPi), InvalidSequence);
  }
}

TEST_CASE("halving the steps moves every recorded element by < 1e-5") {
  const auto seq = build_locked_echo({}, {});
  const std::vector<double> detunings{kTwoPi * 30e3, -kTwoPi * 30e3, kTwoPi * 400e3};
  const StepPlan plan;
  const auto coarse = run_ensemble(seq, DetuningGrid::single(0.0), kDecays, DensityMatrix(), plan,
                                   {detunings, 0});
  const auto fine = run_ensemble(seq, DetuningGrid::single(0.0), kDecays, DensityMatrix(), plan.halved(),
                                 {detunings, 0});
  REQUIRE(coarse.times == fine.times);
  double worst = 0.0;
  for (std::size_t k = 0; k < detunings.size(); ++k) {
    for (std::size_t i = 0; i < coarse.times.size(); ++i) {
      const Matrix3c diff = coarse.recorded[k].states[i].matrix() - fine.recorded[k].states[i].matrix();
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-5);
}
