#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "replica_lab/ksat.hpp"
#include "replica_lab/rng.hpp"

namespace replica_lab::moments {

// r replica rows over n sites, spins +/-1. Column i induces the column type
// sigma_i in {-1,+1}^r, encoded as a bitmask (bit a set -> s^a_i = +1).
// r = 0 is valid: a single empty configuration.
struct ReplicaConfig {
  int r = 0;
  int n = 0;
  std::vector<std::int8_t> spins;  // row-major, spins[a * n + i]

  std::int8_t spin(int a, int i) const { return spins[static_cast<std::size_t>(a) * n + i]; }
  std::uint32_t column_mask(int i) const;
};

// Site counts per column type; sum over the 2^r types equals n.
struct ColumnHistogram {
  int r = 0;
  std::vector<std::uint64_t> counts;  // size 2^r

  std::uint64_t sites() const;
};

ColumnHistogram column_histogram(const ReplicaConfig& config);

// Column-type fractions u on the 2^r-simplex.
struct OrderParameter {
  int r = 0;
  std::vector<double> u;  // size 2^r

  void validate(double tol = 1e-8) const;
  static OrderParameter uniform(int r);
};

// ln of the direct sum over all (2^n)^r replica configurations of
// exp(-sum_a H(s^a)/T). Equals r ln Z by factorization; computed here the
// long way on purpose so that identity can be checked, hence the r*n guard.
double replicated_partition_log(const ksat::KSatInstance& inst, int r, double temperature,
                                int max_rn = 22);

struct LimitRow {
  double r_value;
  double estimate;   // (Z^r - 1) / r
  double abs_error;  // |estimate - ln Z|
};

// (Z^r - 1)/r along a decreasing positive r-sequence for a concrete Z given
// by its log; the error column decreases monotonically toward 0.
std::vector<LimitRow> log_limit_scalar(double log_z, std::span<const double> r_seq);
std::vector<LimitRow> log_limit_check(const ksat::KSatInstance& inst, double temperature,
                                      std::span<const double> r_seq, int max_n = 24);

// Exact average over one uniform random clause (k distinct sites out of the
// histogram's n, signs uniform) of exp(-(total violations over replicas)/T):
//   (1/(C(n,k) 2^k)) * sum over type multisets c <= N of prod_t C(N_t, c_t)
//                      * sum over sign patterns of exp(-viol/T).
// Depends on the configuration only through its histogram. T may be +inf
// (weight 1 exactly).
double clause_average_weight(const ColumnHistogram& histogram, int k, double temperature);

enum class MomentMethod { HistogramExact, BruteforceExact, EnsembleExact, MonteCarlo };
const char* method_name(MomentMethod method);

struct MomentResult {
  double log_moment = 0.0;  // ln of the disorder-averaged Z^r
  MomentMethod method = MomentMethod::HistogramExact;
  ksat::EnsembleParams params;
  int r = 0;
};

// ln sum over histograms N of multinomial(n; N) * clause_average_weight(N)^m.
// Exact because clauses are i.i.d. and the per-clause average depends only
// on the histogram. Guarded by the count C(n + 2^r - 1, 2^r - 1) of terms.
// Enumeration is split into fixed blocks by the first histogram entry and
// merged in block order, so the result is independent of `workers`.
MomentResult moment_exact_histogram(const ksat::EnsembleParams& params, int r,
                                    int workers = 1, double max_terms = 1e8);

// Same moment as a plain sum over all (2^n)^r replica configurations.
MomentResult moment_bruteforce(const ksat::EnsembleParams& params, int r, int max_rn = 20);

// Third route for tiny ensembles: enumerate every possible instance
// ((C(n,k) 2^k)^m of them), average Z^r directly.
MomentResult moment_ensemble_enum(const ksat::EnsembleParams& params, int r,
                                  double max_instances = 1e6);

// Sampled estimate (mean of Z^r over seeded instances), for sizes where the
// exact routes are out of reach.
MomentResult moment_monte_carlo(const ksat::EnsembleParams& params, int r, int samples,
                                int workers = 1, int max_n = 24);

// The large-n rate function on the order-parameter simplex:
//   F(u) = -sum_t u_t ln u_t + alpha * ln w(u), 0 ln 0 := 0,
//   w(u) = 2^-k sum_{signs} sum_{t_1..t_k} u_{t_1}...u_{t_k} exp(-viol/T),
// with i.i.d. type draws (the n -> infinity limit of clause_average_weight).
double rate_function(const OrderParameter& u, double alpha, int k, double temperature);
std::vector<double> rate_gradient(const OrderParameter& u, double alpha, int k,
                                  double temperature);

enum class Ansatz { FullSimplex, ReplicaSymmetric };
const char* ansatz_name(Ansatz ansatz);

struct SaddleOptions {
  int random_starts = 8;
  std::uint64_t seed = 0x5EED5EEDull;
  int max_iterations = 5000;
  // Convergence is declared when ||proj(u + grad) - u|| drops below this;
  // float stalls bottom out around 1e-8 near flat maxima, so the default
  // leaves headroom. The reached norm is always reported.
  double tolerance = 1e-7;
};

struct SaddleResult {
  OrderParameter u_star;
  double f_max = 0.0;
  Ansatz ansatz = Ansatz::FullSimplex;
  int iterations = 0;
  double grad_norm = 0.0;  // final projected-gradient-step norm of the best run
  bool converged = false;
};

// Multi-start projected gradient ascent over the full 2^r-simplex, or over
// the replica-symmetric slice u_sigma = v_{popcount(sigma)} (constraint
// sum_c C(r,c) v_c = 1). F is non-concave in general, so starts include
// uniform, corner-biased, random and (full ansatz) the RS optimum; a
// Nelder-Mead polish in softmax coordinates backs up stalled runs. The
// RS-seeded start makes full-simplex F_max >= RS F_max structural.
SaddleResult saddle_maximize(double alpha, int k, double temperature, int r, Ansatz ansatz,
                             const SaddleOptions& options = {});

// u_sigma = class_weights[popcount(sigma)] / C(r, popcount(sigma)).
OrderParameter expand_replica_symmetric(std::span<const double> class_weights, int r);

// (u o pi)_{sigma_1..sigma_r} = u_{sigma_{pi(1)}..sigma_{pi(r)}}.
OrderParameter permute_replicas(const OrderParameter& u, std::span<const int> perm);
// Gauge companion: sigma -> -sigma on all indices.
OrderParameter flip_spins(const OrderParameter& u);

// F(u o pi) == F(u) for `trials` random permutations, within rel_tol
// (relative to max(1, |F|)).
bool check_replica_permutation_symmetry(const OrderParameter& u, double alpha, int k,
                                        double temperature, int trials,
                                        std::uint64_t seed = 7, double rel_tol = 1e-10);

// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);
// Dirichlet(1) point (uniform on the simplex).
OrderParameter random_simplex_point(int r, SplitMix64& rng);

}  // namespace replica_lab::moments
