#pragma once

// Combinatorial model of population leakage through deshelling pulses.
//
// Every nominal pi of deshelling transfers a fraction eta of the population
// between the excited state |3> and the spin state |2>; the remaining 1 - eta
// stays put. After m pi-steps a term eta^n (1 - eta)^(m - n) has been
// transferred n times, sits in |3> for even n and in |2> for odd n, and has
// picked up a phase n * pi/2.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace deshell::leakage {

using Coefficient = std::uint64_t;

/// How the absorption parameter follows from the optical depth.
enum class EtaConvention {
  transferred_fraction,  ///< eta = 1 - exp(-d): grows with depth (default)
  literal_exp,           ///< eta = exp(-d): kept for comparison only
};

/// eta for an optical depth d >= 0. Throws std::domain_error for d < 0.
double eta_from_depth(double depth, EtaConvention convention = EtaConvention::transferred_fraction);

struct OpticalDepthSpec {
  double depth = 0.0;  ///< d = alpha * l, dimensionless

  static OpticalDepthSpec from_absorption(double alpha_per_m, double length_m);
  double eta(EtaConvention convention = EtaConvention::transferred_fraction) const {
    return eta_from_depth(depth, convention);
  }
};

/// B_nm from the Pascal-type recursion B_nm = B_n(m-1) + B_(n-1)(m-1), B_jj = 1.
/// Exact; throws std::domain_error when n > m and std::overflow_error when the
/// value does not fit in 64 bits.
Coefficient coefficient(unsigned n, unsigned m);

/// Phase picked up by a term transferred n times: (n * pi/2) mod 2pi.
double term_phase(unsigned n);
/// A term adds to the echo iff its phase is a multiple of 2pi (n % 4 == 0).
constexpr bool is_echo_effective(unsigned n) { return n % 4 == 0; }

enum class Residence { excited, spin };  // |3>, |2>
constexpr Residence residence(unsigned n) { return n % 2 == 0 ? Residence::excited : Residence::spin; }

/// short_t: T << T1_opt, both B1 outputs kept. long_t: T1_spin >> T >> T1_opt,
/// the excited-state part left behind by B1 decays and is dropped.
enum class Regime { short_t, long_t };
std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

struct Term {
  unsigned n = 0;
  Coefficient coefficient = 0;

  double phase() const { return term_phase(n); }
  Residence residence() const { return leakage::residence(n); }
  bool echo_effective() const { return is_echo_effective(n); }
};

/// A * sum_n B_n eta^n (1 - eta)^(m - n), terms sorted by ascending n.
struct LeakagePolynomial {
  double amplitude = 1.0;
  unsigned m = 0;
  Regime regime = Regime::short_t;
  std::vector<Term> terms;

  /// Coefficient of eta^n (1-eta)^(m-n); zero when absent.
  Coefficient coefficient_of(unsigned n) const;
  /// Population residing in |3> (even n) or |2> (odd n).
  double population(Residence where, double eta) const;
};

struct Populations {
  double rho33 = 0.0;
  double rho22 = 0.0;
  LeakagePolynomial polynomial;
};

LeakagePolynomial short_t_polynomial(unsigned b1_pi, unsigned b2_pi, double amplitude = 1.0);
LeakagePolynomial long_t_polynomial(unsigned b1_pi, unsigned b2_pi, double amplitude = 1.0);
LeakagePolynomial polynomial(Regime regime, unsigned b1_pi, unsigned b2_pi, double amplitude = 1.0);

/// Populations after a b1_pi B1 and a b2_pi B2 with the decay factors dropped.
Populations populations_short_t(unsigned b1_pi, unsigned b2_pi, double eta, double amplitude = 1.0);
/// As above but only the |2>-resident part of B1's output is carried into B2.
/// Requires b1_pi >= 1.
Populations populations_long_t(unsigned b1_pi, unsigned b2_pi, double eta, double amplitude = 1.0);

/// Sum of the echo-effective |3> terms (n % 4 == 0); n = 0 only with include_zeroth.
double echo_effective_amplitude(const LeakagePolynomial& poly, double eta, bool include_zeroth);

/// Phase recovery of the deshelling pair: (b1 + b2) % 4 == 0. Both areas >= 1.
bool is_phase_recovered(unsigned b1_pi, unsigned b2_pi);

// ---------------------------------------------------------------------------
// Regime classification

struct RegimeSpec {
  double separation_s = 0.0;  ///< T between B1 and B2
  double t1_opt_s = 0.0;
  double t1_spin_s = 0.0;
};

enum class RegimeClass { short_t, long_t, intermediate };

/// short_t when T < T1_opt/10; long_t when 10*T1_opt < T < T1_spin/10;
/// intermediate (model inapplicable) otherwise.
RegimeClass classify(const RegimeSpec& spec);

// ---------------------------------------------------------------------------
// Datasets

struct TableEntry {
  unsigned n = 0;
  unsigned m = 0;
  Coefficient value = 0;
};

/// All B_nm with 0 <= n <= m <= max_m, ordered by n then m.
std::vector<TableEntry> coefficient_table(unsigned max_m);

enum class Fig3Mode { total, effective, effective_no_zeroth };
std::string_view to_string(Fig3Mode mode);

struct Fig3Curve {
  unsigned b2_pi = 0;
  std::vector<double> total;                ///< rho33
  std::vector<double> effective;            ///< echo-effective terms incl. n = 0
  std::vector<double> effective_no_zeroth;  ///< echo-effective terms, n >= 4

  const std::vector<double>& values(Fig3Mode mode) const;
};

struct Fig3Dataset {
  unsigned b1_pi = 0;
  Regime regime = Regime::short_t;
  std::vector<double> eta;
  std::vector<Fig3Curve> curves;
};

/// One curve per B2 area over the eta grid, every mode filled. Throws
/// std::domain_error for eta outside [0, 1].
Fig3Dataset figure3_dataset(unsigned b1_pi, std::span<const unsigned> b2_list,
                            std::span<const double> eta_grid, Regime regime = Regime::short_t);

/// lo, lo + step, ... up to hi inclusive (hi is appended when the step does not land on it).
std::vector<double> linear_grid(double lo, double hi, double step);

}  // namespace deshell::leakage
