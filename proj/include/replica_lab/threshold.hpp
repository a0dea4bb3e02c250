#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "replica_lab/ksat.hpp"
#include "replica_lab/thermo.hpp"

namespace replica_lab::threshold {

struct SatStats {
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
};

struct SatResult {
  bool satisfiable = false;
  std::optional<ksat::SpinConfig> witness;  // energy 0 on the instance when SAT
  SatStats stats;
};

// Complete DPLL: unit propagation, pure-literal elimination, and
// maximum-occurrence branching. Exact on every instance.
SatResult dpll_solve(const ksat::KSatInstance& inst);

struct MaxSatOptions {
  int exhaustive_max_n = thermo::kDefaultMaxExhaustiveN;
  std::uint64_t branch_budget = 50'000'000;  // branch-and-bound node limit past the exhaustive range
};

// Exact minimum number of violated clauses (0 iff satisfiable). Exhaustive
// enumeration up to exhaustive_max_n, branch-and-bound beyond it; a blown
// budget is reported, never silently truncated.
int max_sat_optimum(const ksat::KSatInstance& inst, const MaxSatOptions& options = {});

struct CurvePoint {
  double alpha = 0.0;
  int m = 0;
  int sat_count = 0;
  int samples = 0;
  double p_sat = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
};

struct ThresholdCurve {
  int k = 0;
  int n = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> points;
};

// Fraction of satisfiable instances per density, with Wilson 95% intervals.
// Sampling is coupled across the grid: sample j draws one clause stream and
// the instance at each alpha is a prefix of it, so per sample satisfiability
// is exactly non-increasing in alpha (more clauses never help).
ThresholdCurve p_sat_curve(int k, int n, std::span<const double> alpha_grid, int samples,
                           std::uint64_t seed, int workers = 1);

struct LogisticFit {
  double intercept = 0.0;  // logit p = intercept + slope * alpha
  double slope = 0.0;
  int iterations = 0;
};

struct ThresholdEstimate {
  double alpha_half = 0.0;  // density where the fitted curve crosses 1/2
  double ci_low = 0.0;      // bootstrap 95% interval
  double ci_high = 0.0;
  LogisticFit fit;
  bool monotone_within_noise = true;  // false when some raw point significantly exceeds its predecessor
};

ThresholdEstimate estimate_threshold(const ThresholdCurve& curve, int bootstrap_rounds = 200,
                                     std::uint64_t seed = 17);

struct ScanPoint {
  double alpha = 0.0;
  int m = 0;
  double mean_density = 0.0;  // mean over samples of (min violations)/n
  double std_error = 0.0;
  int unsat_samples = 0;      // samples with a positive optimum
};

struct EnergyDensityScan {
  int k = 0;
  int n = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<ScanPoint> points;
};

// Empirical ground-energy density across the grid, with the same coupled
// clause-stream sampling (per sample the optimum is non-decreasing in alpha).
EnergyDensityScan energy_density_scan(int k, int n, std::span<const double> alpha_grid,
                                      int samples, std::uint64_t seed, int workers = 1,
                                      const MaxSatOptions& options = {});

}  // namespace replica_lab::threshold
