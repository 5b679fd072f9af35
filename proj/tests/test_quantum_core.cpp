#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "deshell/errors.hpp"
#include "deshell/quantum_core.hpp"

using namespace deshell;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * std::numbers::pi;

// Constant drive on [on, off), nothing elsewhere.
DriveSchedule constant_drive(DriveSample drive, double on, double off) {
  return {[=](double t) { return t >= on && t < off ? drive : DriveSample{}; }, {on, off}};
}

DensityMatrix superposition_13() {
  Vector3c psi(1.0, 0.0, 1.0);
  return DensityMatrix::pure(psi / std::sqrt(2.0));
}

DensityMatrix random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix3c a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = Complex(g(rng), g(rng));
  Matrix3c rho = a * a.adjoint();
  rho /= rho.trace().real();
  for (int i = 0; i < 3; ++i) rho(i, i) = rho(i, i).real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(rho);
}

}  // namespace

TEST_CASE("density matrix construction") {
  const DensityMatrix g;
  CHECK(g.population(1) == 1.0);
  CHECK(g.trace_error() == 0.0);
  CHECK(g.min_eigenvalue() == doctest::Approx(0.0));
  Matrix3c bad = Matrix3c::Zero();
  bad(0, 0) = 1.0;
  bad(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix{bad}, std::invalid_argument);
  Matrix3c half = Matrix3c::Zero();
  half(0, 0) = 0.5;
  CHECK_THROWS_AS(DensityMatrix{half}, std::invalid_argument);
  CHECK_THROWS_AS(DensityMatrix::pure(Vector3c(1.0, 1.0, 0.0)), std::invalid_argument);
  const auto s = superposition_13();
  CHECK(std::abs(s(1, 3) - 0.5) <= 1e-15);
  CHECK(s.hermiticity_error() <= 1e-12);
}

TEST_CASE("hamiltonian") {
  CHECK(hamiltonian({}, 0.0).isZero(0.0));

  const Matrix3c h = hamiltonian({kTwoPi * 1e6, 0.0, 0.0, 0.0}, 0.0);
  CHECK(h(0, 2) == Complex(-kPi * 1e6));
  CHECK(h(2, 0) == Complex(-kPi * 1e6));
  Matrix3c rest = h;
  rest(0, 2) = rest(2, 0) = 0.0;
  CHECK(rest.isZero(0.0));

  const double delta = kTwoPi * 30e3;
  const Matrix3c hd = hamiltonian({}, delta);
  CHECK(hd(2, 2) == Complex(delta));
  Matrix3c rest_d = hd;
  rest_d(2, 2) = 0.0;
  CHECK(rest_d.isZero(0.0));

  const Matrix3c hp = hamiltonian({1.0e6, 0.3, 2.0e6, -1.1}, 5.0e5);
  CHECK((hp - hp.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(hp(2, 1) == -0.5 * 2.0e6 * std::polar(1.0, -1.1));
}

TEST_CASE("derivative") {
  const DecayRates rates{1.0e3, 2.0e3, 3.0e3, 4.0e3, 5.0e3, 6.0e3};
  SUBCASE("ground state is stationary") {
    CHECK(derivative(DensityMatrix().matrix(), Matrix3c::Zero(), rates).isZero(0.0));
  }
  SUBCASE("rate-equation limit") {
    Matrix3c rho = Matrix3c::Zero();
    rho(2, 2) = 1.0;
    const double r = 7.0e3;
    const Matrix3c d = derivative(rho, Matrix3c::Zero(), DecayRates::optical(r));
    CHECK(d(2, 2).real() == doctest::Approx(-2 * r));
    CHECK(d(0, 0).real() == doctest::Approx(r));
    CHECK(d(1, 1).real() == doctest::Approx(r));
  }
  SUBCASE("traceless and Hermitian for random states") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const DensityMatrix rho = random_state(rng);
      const Matrix3c h = hamiltonian({1e7 * std::abs(u(rng)), kPi * u(rng), 1e7 * std::abs(u(rng)), kPi * u(rng)},
                                     1e6 * u(rng));
      const Matrix3c d = derivative(rho.matrix(), h, rates);
      // Entries are O(1e7); the trace cancels to rounding.
      CHECK(std::abs(d.trace()) <= 1e-12 * d.cwiseAbs().maxCoeff());
      CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * d.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("propagate reproduces the analytic Rabi solutions") {
  for (double rabi_mhz : {0.1, 1.0, 10.0}) {
    const double rabi = kTwoPi * rabi_mhz * 1e6;
    const double period = kTwoPi / rabi;
    const double horizon = 2.5 * period;
    const StepPlan plan{0.5e-9, 5e-9, horizon / 200};
    CAPTURE(rabi_mhz);

    SUBCASE("resonant") {
      const auto traj = propagate(DensityMatrix(), constant_drive({rabi, 0, 0, 0}, 0.0, horizon), 0.0, {}, 0.0,
                                  horizon, plan);
      double worst = 0.0;
      for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double expect = std::pow(std::sin(rabi * traj.times[i] / 2), 2);
        worst = std::max(worst, std::abs(traj.states[i].population(3) - expect));
      }
      CHECK(worst <= 1e-4);
    }
    SUBCASE("detuned") {
      const double delta = 0.7 * rabi;
      const double w = std::hypot(rabi, delta);
      const auto traj = propagate(DensityMatrix(), constant_drive({rabi, 0, 0, 0}, 0.0, horizon), delta, {}, 0.0,
                                  horizon, plan);
      double worst = 0.0;
      for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double expect = rabi * rabi / (w * w) * std::pow(std::sin(w * traj.times[i] / 2), 2);
        worst = std::max(worst, std::abs(traj.states[i].population(3) - expect));
      }
      CHECK(worst <= 1e-4);
    }
  }
}

TEST_CASE("deshelling round trips on the 2-3 transition") {
  const double rabi = kTwoPi * 5e6;  // pi in 100 ns
  const StepPlan plan;
  const auto start = superposition_13();
  const double before = std::arg(start(1, 3));

  auto run = [&](double area) {
    const double duration = area / rabi;
    return propagate(start, constant_drive({0, 0, rabi, 0}, 0.0, duration), 0.0, {}, 0.0, duration, plan)
        .final_state();
  };

  SUBCASE("2pi: populations restored, coherence phase shifted by pi") {
    const auto end = run(2 * kPi);
    for (int i = 1; i <= 3; ++i) CHECK(std::abs(end.population(i) - start.population(i)) <= 1e-4);
    CHECK(std::abs(std::abs(wrap_phase(std::arg(end(1, 3)) - before)) - kPi) <= 1e-3);
  }
  SUBCASE("4pi: double round trip restores the phase") {
    const auto end = run(4 * kPi);
    for (int i = 1; i <= 3; ++i) CHECK(std::abs(end.population(i) - start.population(i)) <= 1e-4);
    CHECK(std::abs(wrap_phase(std::arg(end(1, 3)) - before)) <= 1e-3);
  }
  SUBCASE("pi: coherence moves to rho12 with a pi/2 phase gain") {
    const auto end = run(kPi);
    CHECK(end.population(3) <= 1e-4);
    CHECK(end.population(2) == doctest::Approx(0.5).epsilon(1e-4));
    const double gain = wrap_phase(std::arg(end(1, 2)) - before);
    CHECK(std::abs(std::abs(gain) - kPi / 2) <= 1e-3);
    // Recorded sign for this frame convention.
    CHECK(gain < 0.0);
  }
}

TEST_CASE("coherence phase") {
  const double delta = kTwoPi * 30e3;
  const StepPlan plan{0.5e-9, 5e-9, 50e-9};
  SUBCASE("free evolution rotates rho13 at the detuning") {
    const auto traj = propagate(superposition_13(), {}, delta, {}, 0.0, 20e-6, plan);
    const auto ph = coherence_phase(traj, {1, 3});
    const double slope = (ph.phase.back() - ph.phase.front()) / (traj.times.back() - traj.times.front());
    CHECK(std::abs(std::abs(slope) - delta) <= 1e-3 * delta);
    CHECK(slope > 0.0);  // +delta with H = delta |3><3|
    for (bool d : ph.defined) CHECK(d);
  }
  SUBCASE("no detuning, constant phase") {
    const auto traj = propagate(superposition_13(), {}, 0.0, DecayRates::optical(1e4), 0.0, 5e-6, plan);
    const auto ph = coherence_phase(traj, {1, 3});
    for (double p : ph.phase) CHECK(std::abs(p - ph.phase.front()) <= 1e-12);
  }
  SUBCASE("unwrapping is continuous over many turns") {
    const auto traj = propagate(superposition_13(), {}, kTwoPi * 1e6, {}, 0.0, 10e-6, plan);
    const auto ph = coherence_phase(traj, {1, 3});
    CHECK(ph.phase.back() == doctest::Approx(kTwoPi * 1e6 * 10e-6).epsilon(1e-6));
    for (std::size_t i = 1; i < ph.phase.size(); ++i) CHECK(ph.phase[i] > ph.phase[i - 1]);
  }
  SUBCASE("phase carried through a null") {
    Trajectory t;
    Matrix3c a = superposition_13().matrix();
    Matrix3c null = Matrix3c::Zero();
    null(0, 0) = 0.5;
    null(1, 1) = 0.5;
    Matrix3c b = a;
    b(0, 2) = std::polar(0.5, 0.4);
    b(2, 0) = std::conj(b(0, 2));
    for (const Matrix3c& m : {a, null, b}) {
      t.times.push_back(static_cast<double>(t.times.size()));
      t.states.push_back(DensityMatrix::unchecked(m));
    }
    const auto ph = coherence_phase(t, {1, 3});
    CHECK(ph.defined == std::vector<bool>{true, false, true});
    CHECK(ph.phase[1] == ph.phase[0]);
    CHECK(ph.phase[2] == doctest::Approx(0.4));
  }
  SUBCASE("bad element") {
    const auto traj = propagate(DensityMatrix(), {}, 0.0, {}, 0.0, 1e-7, plan);
    CHECK_THROWS_AS(coherence_phase(traj, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(coherence_phase(traj, {0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(coherence_phase(traj, {1, 4}), std::invalid_argument);
  }
}

TEST_CASE("sign symmetry between +delta and -delta") {
  // With real couplings, rho(-delta) = Z conj(rho(+delta)) Z, Z = diag(1, 1, -1),
  // so rho13(-delta) = -conj(rho13(+delta)).
  const double rabi = kTwoPi * 2.5e6;
  DriveSchedule schedule{[=](double t) {
                           DriveSample d;
                           if (t >= 1e-6 && t < 1.1e-6) d.rabi_p = rabi;
                           if (t >= 1.1e-6 && t < 1.3e-6) d.rabi_c = 2 * rabi;
                           if (t >= 3e-6 && t < 3.1e-6) d.rabi_p = rabi;
                           return d;
                         },
                         {1e-6, 1.1e-6, 1.3e-6, 3e-6, 3.1e-6}};
  const auto decays = DecayRates::optical(kTwoPi * 2e3);
  const StepPlan plan;
  for (double khz : {30.0, 250.0, 800.0}) {
    const double delta = kTwoPi * khz * 1e3;
    const auto plus = propagate(DensityMatrix(), schedule, delta, decays, 0.0, 5e-6, plan);
    const auto minus = propagate(DensityMatrix(), schedule, -delta, decays, 0.0, 5e-6, plan);
    double worst13 = 0.0, worst12 = 0.0;
    for (std::size_t i = 0; i < plus.states.size(); ++i) {
      worst13 = std::max(worst13, std::abs(minus.states[i](1, 3) + std::conj(plus.states[i](1, 3))));
      worst12 = std::max(worst12, std::abs(minus.states[i](1, 2) - std::conj(plus.states[i](1, 2))));
    }
    CHECK(worst13 <= 1e-8);
    CHECK(worst12 <= 1e-8);
  }
}

TEST_CASE("propagation keeps the state physical") {
  const double rabi = kTwoPi * 5e6;
  const auto traj = propagate(DensityMatrix(), constant_drive({rabi, 0.2, 0.5 * rabi, -0.4}, 0.5e-6, 1.7e-6),
                              kTwoPi * 300e3, DecayRates::optical(kTwoPi * 2e3), 0.0, 5e-6, {});
  for (const auto& s : traj.states) {
    CHECK(s.trace_error() <= 1e-6);
    CHECK(s.hermiticity_error() <= 1e-9);
    CHECK(s.min_eigenvalue() >= -1e-6);
  }
}

TEST_CASE("sampling grid and step plan") {
  const auto traj = propagate(DensityMatrix(), {}, 0.0, {}, 0.0, 1e-6, {0.5e-9, 5e-9, 50e-9});
  REQUIRE(traj.times.size() == 21);
  for (std::size_t i = 1; i < traj.times.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);
  CHECK(traj.times.back() == 1e-6);
  CHECK(traj.states.size() == traj.times.size());

  const auto odd = propagate(DensityMatrix(), {}, 0.0, {}, 0.0, 1.01e-6, {0.5e-9, 5e-9, 50e-9});
  CHECK(odd.times.size() == 22);
  CHECK(odd.times.back() == 1.01e-6);

  CHECK_THROWS_AS(propagate(DensityMatrix(), {}, 0.0, {}, 0.0, 1e-6, {0.0, 5e-9, 50e-9}), ConfigError);
  CHECK_THROWS_AS(propagate(DensityMatrix(), {}, 0.0, {}, 0.0, 1e-6, {0.5e-9, -5e-9, 50e-9}), ConfigError);
  CHECK_THROWS_AS(propagate(DensityMatrix(), {}, 0.0, {}, 1e-6, 1e-6, {}), ConfigError);
}

TEST_CASE("too coarse a step is reported as divergence") {
  const double rabi = kTwoPi * 10e6;
  CHECK_THROWS_AS(propagate(DensityMatrix(), constant_drive({rabi, 0, 0, 0}, 0.0, 20e-6), 0.0, {}, 0.0, 20e-6,
                            {100e-9, 100e-9, 1e-6}),
                  IntegrationDiverged);
}
