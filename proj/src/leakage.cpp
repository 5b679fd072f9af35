#include "deshell/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace deshell::leakage {

namespace {

void require_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::domain_error("eta must lie in [0, 1], got " + std::to_string(eta));
  }
}

Coefficient checked_add(Coefficient a, Coefficient b) {
  Coefficient sum = 0;
  if (__builtin_add_overflow(a, b, &sum)) throw std::overflow_error("B_nm exceeds 64 bits");
  return sum;
}

Coefficient checked_mul(Coefficient a, Coefficient b) {
  Coefficient prod = 0;
  if (__builtin_mul_overflow(a, b, &prod)) throw std::overflow_error("B_nm exceeds 64 bits");
  return prod;
}

// Row m of the B table, built from row 0 by the recursion.
std::vector<Coefficient> coefficient_row(unsigned m) {
  std::vector<Coefficient> row{1};  // B_00
  for (unsigned k = 1; k <= m; ++k) {
    std::vector<Coefficient> next(k + 1, 0);
    next[k] = 1;  // B_kk
    for (unsigned n = 0; n < k; ++n) {
      next[n] = n == 0 ? row[0] : checked_add(row[n], row[n - 1]);
    }
    row = std::move(next);
  }
  return row;
}

// sum_n c_n x^n y^(m-n) by homogeneous Horner in x, (1 - eta) powers accumulated.
template <class Keep>
double evaluate(const LeakagePolynomial& poly, double eta, Keep keep) {
  const double x = eta;
  const double y = 1.0 - eta;
  std::vector<double> c(poly.m + 1, 0.0);
  for (const Term& t : poly.terms) {
    if (keep(t)) c[t.n] = static_cast<double>(t.coefficient);
  }
  double acc = c[poly.m];
  double ypow = 1.0;
  for (unsigned n = poly.m; n-- > 0;) {
    ypow *= y;
    acc = acc * x + c[n] * ypow;
  }
  return poly.amplitude * acc;
}

}  // namespace

double eta_from_depth(double depth, EtaConvention convention) {
  if (!(depth >= 0.0)) throw std::domain_error("optical depth must be non-negative");
  return convention == EtaConvention::transferred_fraction ? -std::expm1(-depth) : std::exp(-depth);
}

OpticalDepthSpec OpticalDepthSpec::from_absorption(double alpha_per_m, double length_m) {
  if (!(alpha_per_m >= 0.0) || !(length_m >= 0.0)) {
    throw std::domain_error("absorption coefficient and length must be non-negative");
  }
  return {alpha_per_m * length_m};
}

Coefficient coefficient(unsigned n, unsigned m) {
  if (n > m) throw std::domain_error("B_nm requires n <= m");
  return coefficient_row(m)[n];
}

double term_phase(unsigned n) { return static_cast<double>(n % 4) * (std::numbers::pi / 2.0); }

std::string_view to_string(Regime regime) { return regime == Regime::short_t ? "short" : "long"; }

Regime parse_regime(std::string_view text) {
  if (text == "short" || text == "short-T") return Regime::short_t;
  if (text == "long" || text == "long-T") return Regime::long_t;
  throw std::invalid_argument("unknown regime '" + std::string(text) + "' (expected short or long)");
}

Coefficient LeakagePolynomial::coefficient_of(unsigned n) const {
  auto it = std::find_if(terms.begin(), terms.end(), [n](const Term& t) { return t.n == n; });
  return it == terms.end() ? 0 : it->coefficient;
}

double LeakagePolynomial::population(Residence where, double eta) const {
  require_eta(eta);
  return evaluate(*this, eta, [where](const Term& t) { return t.residence() == where; });
}

LeakagePolynomial short_t_polynomial(unsigned b1_pi, unsigned b2_pi, double amplitude) {
  LeakagePolynomial poly{amplitude, b1_pi + b2_pi, Regime::short_t, {}};
  const auto row = coefficient_row(poly.m);
  for (unsigned n = 0; n <= poly.m; ++n) poly.terms.push_back({n, row[n]});
  return poly;
}

LeakagePolynomial long_t_polynomial(unsigned b1_pi, unsigned b2_pi, double amplitude) {
  if (b1_pi == 0) throw std::domain_error("long-T regime needs a B1 pulse (b1_pi >= 1)");
  // Only the odd-n (|2>-resident) part of the B1 expansion survives the wait;
  // B2 then continues the recursion on each surviving term.
  const auto seed = coefficient_row(b1_pi);
  const auto spread = coefficient_row(b2_pi);
  LeakagePolynomial poly{amplitude, b1_pi + b2_pi, Regime::long_t, {}};
  std::vector<Coefficient> c(poly.m + 1, 0);
  for (unsigned n0 = 1; n0 <= b1_pi; n0 += 2) {
    for (unsigned j = 0; j <= b2_pi; ++j) {
      c[n0 + j] = checked_add(c[n0 + j], checked_mul(seed[n0], spread[j]));
    }
  }
  for (unsigned n = 0; n <= poly.m; ++n) {
    if (c[n] != 0) poly.terms.push_back({n, c[n]});
  }
  return poly;
}

LeakagePolynomial polynomial(Regime regime, unsigned b1_pi, unsigned b2_pi, double amplitude) {
  return regime == Regime::short_t ? short_t_polynomial(b1_pi, b2_pi, amplitude)
                                   : long_t_polynomial(b1_pi, b2_pi, amplitude);
}

namespace {
Populations populations_of(LeakagePolynomial poly, double eta) {
  Populations out;
  out.rho33 = poly.population(Residence::excited, eta);
  out.rho22 = poly.population(Residence::spin, eta);
  out.polynomial = std::move(poly);
  return out;
}
}  // namespace

Populations populations_short_t(unsigned b1_pi, unsigned b2_pi, double eta, double amplitude) {
  return populations_of(short_t_polynomial(b1_pi, b2_pi, amplitude), eta);
}

Populations populations_long_t(unsigned b1_pi, unsigned b2_pi, double eta, double amplitude) {
  return populations_of(long_t_polynomial(b1_pi, b2_pi, amplitude), eta);
}

double echo_effective_amplitude(const LeakagePolynomial& poly, double eta, bool include_zeroth) {
  require_eta(eta);
  return evaluate(poly, eta, [include_zeroth](const Term& t) {
    return t.echo_effective() && (include_zeroth || t.n != 0);
  });
}

bool is_phase_recovered(unsigned b1_pi, unsigned b2_pi) {
  if (b1_pi == 0 || b2_pi == 0) throw std::domain_error("deshelling areas must be >= 1 pi");
  return (b1_pi + b2_pi) % 4 == 0;
}

RegimeClass classify(const RegimeSpec& spec) {
  if (!(spec.separation_s >= 0.0) || !(spec.t1_opt_s > 0.0) || !(spec.t1_spin_s > 0.0)) {
    throw std::domain_error("regime classification needs T >= 0 and positive T1 values");
  }
  if (spec.separation_s < spec.t1_opt_s / 10.0) return RegimeClass::short_t;
  if (spec.separation_s > 10.0 * spec.t1_opt_s && spec.separation_s < spec.t1_spin_s / 10.0) {
    return RegimeClass::long_t;
  }
  return RegimeClass::intermediate;
}

std::vector<TableEntry> coefficient_table(unsigned max_m) {
  std::vector<std::vector<Coefficient>> rows;
  rows.reserve(max_m + 1);
  for (unsigned m = 0; m <= max_m; ++m) rows.push_back(coefficient_row(m));
  std::vector<TableEntry> table;
  for (unsigned n = 0; n <= max_m; ++n) {
    for (unsigned m = n; m <= max_m; ++m) table.push_back({n, m, rows[m][n]});
  }
  return table;
}

std::string_view to_string(Fig3Mode mode) {
  switch (mode) {
    case Fig3Mode::total: return "total";
    case Fig3Mode::effective: return "effective";
    case Fig3Mode::effective_no_zeroth: return "effective-no-zeroth";
  }
  return "?";
}

const std::vector<double>& Fig3Curve::values(Fig3Mode mode) const {
  switch (mode) {
    case Fig3Mode::total: return total;
    case Fig3Mode::effective: return effective;
    case Fig3Mode::effective_no_zeroth: break;
  }
  return effective_no_zeroth;
}

Fig3Dataset figure3_dataset(unsigned b1_pi, std::span<const unsigned> b2_list,
                            std::span<const double> eta_grid, Regime regime) {
  for (double eta : eta_grid) require_eta(eta);
  Fig3Dataset data{b1_pi, regime, {eta_grid.begin(), eta_grid.end()}, {}};
  for (unsigned b2 : b2_list) {
    const auto poly = polynomial(regime, b1_pi, b2);
    Fig3Curve curve{b2, {}, {}, {}};
    for (double eta : eta_grid) {
      curve.total.push_back(poly.population(Residence::excited, eta));
      curve.effective.push_back(echo_effective_amplitude(poly, eta, true));
      curve.effective_no_zeroth.push_back(echo_effective_amplitude(poly, eta, false));
    }
    data.curves.push_back(std::move(curve));
  }
  return data;
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("grid needs lo <= hi and a positive step");
  }
  const double span = hi - lo;
  const auto count = static_cast<long>(std::floor(span / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count) + 2);
  for (long k = 0; k <= count; ++k) grid.push_back(lo + static_cast<double>(k) * step);
  if (std::abs(grid.back() - hi) <= 1e-9 * std::max(1.0, std::abs(hi))) {
    grid.back() = hi;
  } else {
    grid.push_back(hi);
  }
  return grid;
}

}  // namespace deshell::leakage
