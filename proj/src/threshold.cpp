#include "replica_lab/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "replica_lab/errors.hpp"
#include "replica_lab/numeric.hpp"
#include "replica_lab/rng.hpp"

namespace replica_lab::threshold {

namespace {

// DIMACS-style literals: v+1 plain, -(v+1) negated.
using LitClauses = std::vector<std::vector<int>>;

LitClauses to_lit_clauses(const ksat::KSatInstance& inst) {
  LitClauses out;
  out.reserve(inst.m());
  for (const auto& clause : inst.clauses()) {
    std::vector<int> lits;
    lits.reserve(clause.size());
    for (const auto& lit : clause) lits.push_back(lit.sign * (lit.var + 1));
    out.push_back(std::move(lits));
  }
  return out;
}

// Removes clauses satisfied by `lit` and deletes -lit from the rest.
// Returns false when an empty clause appears.
bool assign_literal(LitClauses& clauses, int lit) {
  std::erase_if(clauses, [lit](const std::vector<int>& c) {
    return std::find(c.begin(), c.end(), lit) != c.end();
  });
  for (auto& c : clauses) {
    std::erase(c, -lit);
    if (c.empty()) return false;
  }
  return true;
}

int max_occurrence_literal(const LitClauses& clauses) {
  std::map<int, int> count;
  for (const auto& c : clauses) {
    for (int lit : c) ++count[lit];
  }
  int best = 0, best_count = -1;
  for (const auto& [lit, cnt] : count) {
    if (cnt > best_count) {
      best = lit;
      best_count = cnt;
    }
  }
  return best;
}

bool dpll_recurse(LitClauses clauses, std::vector<int>& assignment, SatStats& stats) {
  // unit propagation
  while (true) {
    int unit = 0;
    for (const auto& c : clauses) {
      if (c.size() == 1) {
        unit = c.front();
        break;
      }
    }
    if (unit == 0) break;
    ++stats.propagations;
    assignment.push_back(unit);
    if (!assign_literal(clauses, unit)) return false;
  }

  // pure literals
  while (true) {
    std::map<int, int> seen;  // var -> bitmask of polarities
    for (const auto& c : clauses) {
      for (int lit : c) seen[std::abs(lit)] |= lit > 0 ? 1 : 2;
    }
    int pure = 0;
    for (const auto& [var, mask] : seen) {
      if (mask == 1 || mask == 2) {
        pure = mask == 1 ? var : -var;
        break;
      }
    }
    if (pure == 0) break;
    ++stats.propagations;
    assignment.push_back(pure);
    if (!assign_literal(clauses, pure)) return false;  // cannot happen for a pure literal
  }

  if (clauses.empty()) return true;

  int lit = max_occurrence_literal(clauses);
  ++stats.decisions;
  std::size_t mark = assignment.size();

  {
    LitClauses branch = clauses;
    assignment.push_back(lit);
    if (assign_literal(branch, lit) && dpll_recurse(std::move(branch), assignment, stats)) {
      return true;
    }
  }
  assignment.resize(mark);
  assignment.push_back(-lit);
  if (!assign_literal(clauses, -lit)) return false;
  return dpll_recurse(std::move(clauses), assignment, stats);
}

}  // namespace

SatResult dpll_solve(const ksat::KSatInstance& inst) {
  SatResult result;
  std::vector<int> assignment;
  bool sat = dpll_recurse(to_lit_clauses(inst), assignment, result.stats);
  result.satisfiable = sat;
  if (sat) {
    ksat::SpinConfig spins(inst.n(), 1);  // unconstrained variables default to true
    for (int lit : assignment) {
      spins[std::abs(lit) - 1] = lit > 0 ? 1 : -1;
    }
    result.witness = std::move(spins);
  }
  return result;
}

namespace {

struct BranchBound {
  const std::uint64_t budget;
  std::uint64_t nodes = 0;
  int best;

  BranchBound(std::uint64_t budget, int upper) : budget(budget), best(upper) {}

  void search(const LitClauses& clauses, int violated) {
    if (++nodes > budget) {
      throw CapacityError("max_sat_optimum: branch-and-bound budget of " +
                          std::to_string(budget) + " nodes exhausted");
    }
    if (violated >= best) return;
    if (clauses.empty()) {
      best = violated;
      return;
    }
    int lit = max_occurrence_literal(clauses);
    for (int choice : {lit, -lit}) {
      LitClauses reduced;
      reduced.reserve(clauses.size());
      int extra = 0;
      for (const auto& c : clauses) {
        if (std::find(c.begin(), c.end(), choice) != c.end()) continue;  // satisfied
        std::vector<int> rest;
        rest.reserve(c.size());
        for (int l : c) {
          if (l != -choice) rest.push_back(l);
        }
        if (rest.empty()) {
          ++extra;  // clause violated under this branch
        } else {
          reduced.push_back(std::move(rest));
        }
      }
      search(reduced, violated + extra);
    }
  }
};

}  // namespace

int max_sat_optimum(const ksat::KSatInstance& inst, const MaxSatOptions& options) {
  if (inst.n() <= options.exhaustive_max_n) {
    return thermo::ground_energy(inst, options.exhaustive_max_n).first;
  }
  BranchBound bb(options.branch_budget, inst.m());
  bb.search(to_lit_clauses(inst), 0);
  return bb.best;
}

namespace {

void validate_grid(std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw std::invalid_argument("alpha grid must be nonempty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (alpha_grid[i] < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1])) {
      throw std::invalid_argument("alpha grid must increase strictly");
    }
  }
}

std::vector<int> grid_clause_counts(int n, std::span<const double> alpha_grid) {
  std::vector<int> out;
  out.reserve(alpha_grid.size());
  for (double a : alpha_grid) out.push_back(static_cast<int>(std::llround(a * n)));
  return out;
}

std::pair<double, double> wilson_interval(int successes, int samples) {
  const double z = 1.959963984540054;  // 95%
  double nf = samples;
  double p = successes / nf;
  double z2 = z * z;
  double denom = 1.0 + z2 / nf;
  double center = (p + z2 / (2.0 * nf)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

ThresholdCurve p_sat_curve(int k, int n, std::span<const double> alpha_grid, int samples,
                           std::uint64_t seed, int workers) {
  validate_grid(alpha_grid);
  if (samples < 1) throw std::invalid_argument("p_sat_curve: samples must be >= 1");
  std::vector<int> counts = grid_clause_counts(n, alpha_grid);
  ksat::EnsembleParams probe{n, k, counts.back(), -1.0, 1.0, seed};
  probe.validate();

  const int points = static_cast<int>(alpha_grid.size());
  std::vector<std::uint8_t> sat(static_cast<std::size_t>(samples) * points);
  parallel_for_indexed(samples, workers, [&](std::size_t j) {
    SplitMix64 rng(derive_stream_seed(seed, j));
    auto stream = ksat::generate_clauses(n, k, counts.back(), rng);
    for (int p = 0; p < points; ++p) {
      std::vector<ksat::Clause> prefix(stream.begin(), stream.begin() + counts[p]);
      ksat::KSatInstance inst(n, k, std::move(prefix));
      sat[j * points + p] = dpll_solve(inst).satisfiable ? 1 : 0;
    }
  });

  ThresholdCurve curve;
  curve.k = k;
  curve.n = n;
  curve.samples = samples;
  curve.seed = seed;
  for (int p = 0; p < points; ++p) {
    int sat_count = 0;
    for (int j = 0; j < samples; ++j) sat_count += sat[static_cast<std::size_t>(j) * points + p];
    auto [lo, hi] = wilson_interval(sat_count, samples);
    curve.points.push_back(CurvePoint{alpha_grid[p], counts[p], sat_count, samples,
                                      static_cast<double>(sat_count) / samples, lo, hi});
  }
  return curve;
}

namespace {

// Logistic regression logit p = b0 + b1*alpha by Newton iteration with a
// small ridge to survive complete separation (a step-like curve).
LogisticFit fit_logistic(const std::vector<double>& alpha, const std::vector<int>& successes,
                         const std::vector<int>& totals) {
  const double ridge = 1e-6;
  double b0 = 0.0, b1 = 0.0;
  {
    // empirical-logit least squares start
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int pts = static_cast<int>(alpha.size());
    for (int i = 0; i < pts; ++i) {
      double p = (successes[i] + 0.5) / (totals[i] + 1.0);
      double y = std::log(p / (1.0 - p));
      sx += alpha[i];
      sy += y;
      sxx += alpha[i] * alpha[i];
      sxy += alpha[i] * y;
    }
    double det = pts * sxx - sx * sx;
    if (std::fabs(det) > 1e-12) {
      b1 = (pts * sxy - sx * sy) / det;
      b0 = (sy - b1 * sx) / pts;
    }
  }
  int iter = 0;
  for (; iter < 100; ++iter) {
    double g0 = -ridge * b0, g1 = -ridge * b1;
    double h00 = ridge, h01 = 0.0, h11 = ridge;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      double eta = b0 + b1 * alpha[i];
      double p = 1.0 / (1.0 + std::exp(-eta));
      double w = totals[i] * p * (1.0 - p);
      double resid = successes[i] - totals[i] * p;
      g0 += resid;
      g1 += resid * alpha[i];
      h00 += w;
      h01 += w * alpha[i];
      h11 += w * alpha[i] * alpha[i];
    }
    double det = h00 * h11 - h01 * h01;
    if (std::fabs(det) < 1e-14) break;
    double d0 = (h11 * g0 - h01 * g1) / det;
    double d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0;
    b1 += d1;
    if (std::fabs(d0) + std::fabs(d1) < 1e-12) {
      ++iter;
      break;
    }
  }
  return LogisticFit{b0, b1, iter};
}

}  // namespace

ThresholdEstimate estimate_threshold(const ThresholdCurve& curve, int bootstrap_rounds,
                                     std::uint64_t seed) {
  if (curve.points.size() < 2) {
    throw std::invalid_argument("estimate_threshold: need at least two grid points");
  }
  bool above = false, below = false;
  for (const auto& pt : curve.points) {
    if (pt.p_sat > 0.5) above = true;
    if (pt.p_sat < 0.5) below = true;
  }
  if (!above || !below) {
    throw std::domain_error(
        "estimate_threshold: curve does not span both sides of 1/2; widen the alpha grid");
  }

  std::vector<double> alpha;
  std::vector<int> successes, totals;
  for (const auto& pt : curve.points) {
    alpha.push_back(pt.alpha);
    successes.push_back(pt.sat_count);
    totals.push_back(pt.samples);
  }

  LogisticFit fit = fit_logistic(alpha, successes, totals);
  if (!(fit.slope < 0.0)) {
    throw std::domain_error("estimate_threshold: fitted curve is not decreasing in alpha");
  }
  double alpha_half = -fit.intercept / fit.slope;
  if (alpha_half < alpha.front() || alpha_half > alpha.back()) {
    throw std::domain_error("estimate_threshold: fitted midpoint falls outside the grid");
  }

  SplitMix64 rng(seed);
  std::vector<double> midpoints;
  midpoints.reserve(bootstrap_rounds);
  std::vector<int> resampled(successes.size());
  for (int round = 0; round < bootstrap_rounds; ++round) {
    for (std::size_t i = 0; i < successes.size(); ++i) {
      double p = static_cast<double>(successes[i]) / totals[i];
      int hits = 0;
      for (int t = 0; t < totals[i]; ++t) {
        if (rng.unit() <= p) ++hits;
      }
      resampled[i] = hits;
    }
    LogisticFit f = fit_logistic(alpha, resampled, totals);
    if (f.slope < 0.0) midpoints.push_back(-f.intercept / f.slope);
  }
  double ci_low = alpha_half, ci_high = alpha_half;
  if (!midpoints.empty()) {
    std::sort(midpoints.begin(), midpoints.end());
    auto quantile = [&](double q) {
      double pos = q * (midpoints.size() - 1);
      std::size_t i = static_cast<std::size_t>(pos);
      double frac = pos - i;
      return i + 1 < midpoints.size() ? midpoints[i] * (1 - frac) + midpoints[i + 1] * frac
                                      : midpoints[i];
    };
    ci_low = quantile(0.025);
    ci_high = quantile(0.975);
  }

  bool monotone = true;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    // significant rise: the next Wilson interval sits entirely above the previous one
    if (curve.points[i].wilson_low > curve.points[i - 1].wilson_high) {
      monotone = false;
    }
  }

  return ThresholdEstimate{alpha_half, ci_low, ci_high, fit, monotone};
}

EnergyDensityScan energy_density_scan(int k, int n, std::span<const double> alpha_grid,
                                      int samples, std::uint64_t seed, int workers,
                                      const MaxSatOptions& options) {
  validate_grid(alpha_grid);
  if (samples < 1) throw std::invalid_argument("energy_density_scan: samples must be >= 1");
  if (n < 1) throw std::invalid_argument("energy_density_scan: n must be >= 1");
  std::vector<int> counts = grid_clause_counts(n, alpha_grid);
  ksat::EnsembleParams probe{n, k, counts.back(), -1.0, 1.0, seed};
  probe.validate();

  const int points = static_cast<int>(alpha_grid.size());
  std::vector<int> optima(static_cast<std::size_t>(samples) * points);
  parallel_for_indexed(samples, workers, [&](std::size_t j) {
    SplitMix64 rng(derive_stream_seed(seed, j));
    auto stream = ksat::generate_clauses(n, k, counts.back(), rng);
    for (int p = 0; p < points; ++p) {
      std::vector<ksat::Clause> prefix(stream.begin(), stream.begin() + counts[p]);
      ksat::KSatInstance inst(n, k, std::move(prefix));
      optima[j * points + p] = max_sat_optimum(inst, options);
    }
  });

  EnergyDensityScan scan;
  scan.k = k;
  scan.n = n;
  scan.samples = samples;
  scan.seed = seed;
  for (int p = 0; p < points; ++p) {
    double mean = 0.0;
    int positive = 0;
    for (int j = 0; j < samples; ++j) {
      int opt = optima[static_cast<std::size_t>(j) * points + p];
      mean += static_cast<double>(opt) / n;
      if (opt > 0) ++positive;
    }
    mean /= samples;
    double stderr_val = 0.0;
    if (samples >= 2) {
      double ss = 0.0;
      for (int j = 0; j < samples; ++j) {
        double d = static_cast<double>(optima[static_cast<std::size_t>(j) * points + p]) / n - mean;
        ss += d * d;
      }
      stderr_val = std::sqrt(ss / (samples - 1)) / std::sqrt(static_cast<double>(samples));
    }
    scan.points.push_back(ScanPoint{alpha_grid[p], counts[p], mean, stderr_val, positive});
  }
  return scan;
}

}  // namespace replica_lab::threshold
