#pragma once

#include <gmpxx.h>

#include <span>
#include <string>
#include <vector>

namespace replica_lab::gammafn {

struct GammaValue {
  double x;
  double value;      // Gamma(x); +inf once past the double range (x > ~171.6)
  double log_value;  // ln Gamma(x)
};

// Euler Gamma for x > 0 via a Lanczos rational approximation (g = 7, 9
// coefficients). Relative error is ~1e-13 over the double range; rejects
// x <= 0 (no reflection, negative arguments are out of scope here).
GammaValue gamma(double x);
double log_gamma(double x);

// Exact n! in arbitrary precision; the source of truth wherever an integer
// is meant (group orders, multinomials, table cross-checks).
mpz_class factorial_exact(unsigned long n);

struct GammaTableRow {
  double argument;             // n or a non-integer alpha
  bool is_integer;
  std::string exact_factorial; // decimal n!, empty for non-integer rows
  double gamma_value;          // Gamma(argument + 1)
  double relative_gap;         // |Gamma(n+1) - n!| / n!, NaN for non-integer rows
  bool cardinal;               // false on non-integer rows: no finite set has Gamma(alpha+1) permutations
};

// Rows n = 0..n_max (n_max <= 170 so Gamma(n+1) stays finite in double),
// plus one display-only row per extra non-integer argument.
std::vector<GammaTableRow> gamma_factorial_table(int n_max,
                                                 std::span<const double> extra_alphas = {});

}  // namespace replica_lab::gammafn
