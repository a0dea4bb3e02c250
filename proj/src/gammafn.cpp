#include "replica_lab/gammafn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace replica_lab::gammafn {

namespace {

// Lanczos coefficients for g = 7 (Godfrey's 9-term set).
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};
const double kHalfLogTwoPi = 0.5 * std::log(2.0 * M_PI);

// Valid for x >= 0.5.
double log_gamma_lanczos(double x) {
  double z = x - 1.0;
  double series = kLanczos[0];
  for (int i = 1; i < 9; ++i) series += kLanczos[i] / (z + i);
  double t = z + kLanczosG + 0.5;
  return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(series);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_gamma: argument must be > 0");
  if (x < 0.5) return log_gamma_lanczos(x + 1.0) - std::log(x);
  return log_gamma_lanczos(x);
}

GammaValue gamma(double x) {
  double lg = log_gamma(x);
  return GammaValue{x, std::exp(lg), lg};
}

mpz_class factorial_exact(unsigned long n) {
  mpz_class out;
  mpz_fac_ui(out.get_mpz_t(), n);
  return out;
}

std::vector<GammaTableRow> gamma_factorial_table(int n_max,
                                                 std::span<const double> extra_alphas) {
  if (n_max < 0 || n_max > 170) {
    throw std::invalid_argument("gamma_factorial_table: n_max must be in [0, 170]");
  }
  std::vector<GammaTableRow> rows;
  rows.reserve(static_cast<std::size_t>(n_max) + 1 + extra_alphas.size());
  for (int n = 0; n <= n_max; ++n) {
    mpz_class fact = factorial_exact(static_cast<unsigned long>(n));
    double fact_d = fact.get_d();
    double g = gamma(static_cast<double>(n) + 1.0).value;
    rows.push_back(GammaTableRow{
        static_cast<double>(n),
        true,
        fact.get_str(),
        g,
        std::fabs(g - fact_d) / fact_d,
        true,
    });
  }
  for (double alpha : extra_alphas) {
    if (!(alpha > -1.0)) {
      throw std::invalid_argument("gamma_factorial_table: alpha must be > -1");
    }
    rows.push_back(GammaTableRow{
        alpha,
        false,
        "",
        gamma(alpha + 1.0).value,
        std::numeric_limits<double>::quiet_NaN(),
        false,
    });
  }
  return rows;
}

}  // namespace replica_lab::gammafn
