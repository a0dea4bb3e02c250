#include "replica_lab/moments.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

#include "replica_lab/errors.hpp"
#include "replica_lab/gammafn.hpp"
#include "replica_lab/numeric.hpp"
#include "replica_lab/thermo.hpp"

namespace replica_lab::moments {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_replica_count(int r, int limit, const char* where) {
  if (r < 0) throw std::invalid_argument(std::string(where) + ": r must be >= 0");
  if (r > limit) {
    throw CapacityError(std::string(where) + ": 2^" + std::to_string(r) +
                        " column types exceed the r <= " + std::to_string(limit) + " guard");
  }
}

void check_temperature(double temperature, const char* where) {
  // +inf is allowed where it makes sense (weight identically 1).
  if (std::isnan(temperature) || temperature <= 0.0) {
    throw std::invalid_argument(std::string(where) + ": temperature must be > 0");
  }
}

// exp(-v / T) for v = 0..r violations.
std::vector<double> violation_weights(int r, double temperature) {
  std::vector<double> w(static_cast<std::size_t>(r) + 1);
  for (int v = 0; v <= r; ++v) {
    w[v] = std::isinf(temperature) ? 1.0 : std::exp(-static_cast<double>(v) / temperature);
  }
  return w;
}

double log_binomial(double n, double k) {
  return gammafn::log_gamma(n + 1.0) - gammafn::log_gamma(k + 1.0) -
         gammafn::log_gamma(n - k + 1.0);
}

}  // namespace

std::uint32_t ReplicaConfig::column_mask(int i) const {
  std::uint32_t mask = 0;
  for (int a = 0; a < r; ++a) {
    if (spin(a, i) > 0) mask |= std::uint32_t{1} << a;
  }
  return mask;
}

std::uint64_t ColumnHistogram::sites() const {
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  return total;
}

ColumnHistogram column_histogram(const ReplicaConfig& config) {
  check_replica_count(config.r, 20, "column_histogram");
  if (config.n < 0 ||
      config.spins.size() != static_cast<std::size_t>(config.r) * config.n) {
    throw std::invalid_argument("column_histogram: spins size must be r * n");
  }
  ColumnHistogram hist;
  hist.r = config.r;
  hist.counts.assign(std::size_t{1} << config.r, 0);
  for (int i = 0; i < config.n; ++i) ++hist.counts[config.column_mask(i)];
  return hist;
}

void OrderParameter::validate(double tol) const {
  if (r < 0 || u.size() != (std::size_t{1} << r)) {
    throw std::invalid_argument("OrderParameter: u must have 2^r entries");
  }
  double sum = 0.0;
  for (double x : u) {
    if (!(x >= -tol)) {
      throw std::invalid_argument("OrderParameter: negative component beyond tolerance");
    }
    sum += x;
  }
  if (std::fabs(sum - 1.0) > tol) {
    throw std::invalid_argument("OrderParameter: components sum to " + format_double(sum) +
                                ", off the simplex");
  }
}

OrderParameter OrderParameter::uniform(int r) {
  check_replica_count(r, 20, "OrderParameter::uniform");
  std::size_t size = std::size_t{1} << r;
  return OrderParameter{r, std::vector<double>(size, 1.0 / static_cast<double>(size))};
}

double replicated_partition_log(const ksat::KSatInstance& inst, int r, double temperature,
                                int max_rn) {
  if (r < 0) throw std::invalid_argument("replicated_partition_log: r must be >= 0");
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw std::invalid_argument("replicated_partition_log: temperature must be finite and > 0");
  }
  if (r == 0) return 0.0;  // empty product: one configuration of zero replicas
  long long rn = static_cast<long long>(r) * inst.n();
  if (rn > max_rn) {
    throw CapacityError("replicated_partition_log: 2^" + std::to_string(rn) +
                        " replica configurations (limit 2^" + std::to_string(max_rn) +
                        "); the factorized route is r * log Z from the partition function");
  }

  std::vector<int> energies = thermo::config_energies(inst, inst.n());
  const std::size_t states = energies.size();
  std::vector<std::uint64_t> digits(r, 0);
  std::vector<std::uint64_t> total_energy_counts(
      static_cast<std::size_t>(r) * inst.m() + 1, 0);
  long long energy_sum = static_cast<long long>(r) * energies[0];
  while (true) {
    ++total_energy_counts[energy_sum];
    int pos = 0;
    while (pos < r) {
      energy_sum -= energies[digits[pos]];
      digits[pos] = (digits[pos] + 1) % states;
      energy_sum += energies[digits[pos]];
      if (digits[pos] != 0) break;
      ++pos;
    }
    if (pos == r) break;
  }

  LogSumAccumulator acc;
  for (std::size_t e = 0; e < total_energy_counts.size(); ++e) {
    if (total_energy_counts[e] == 0) continue;
    acc.add(std::log(static_cast<double>(total_energy_counts[e])) -
            static_cast<double>(e) / temperature);
  }
  return acc.value();
}

std::vector<LimitRow> log_limit_scalar(double log_z, std::span<const double> r_seq) {
  if (r_seq.empty()) throw std::invalid_argument("log_limit_scalar: empty r sequence");
  for (std::size_t i = 0; i < r_seq.size(); ++i) {
    if (!(r_seq[i] > 0.0)) {
      throw std::invalid_argument("log_limit_scalar: r values must be positive");
    }
    if (i > 0 && !(r_seq[i] < r_seq[i - 1])) {
      throw std::invalid_argument("log_limit_scalar: r sequence must decrease strictly");
    }
  }
  std::vector<LimitRow> rows;
  rows.reserve(r_seq.size());
  for (double r : r_seq) {
    double estimate = std::expm1(r * log_z) / r;
    rows.push_back(LimitRow{r, estimate, std::fabs(estimate - log_z)});
  }
  double slack = 1e-15 * std::max(1.0, log_z * log_z);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].abs_error > rows[i - 1].abs_error + slack) {
      throw std::logic_error("log_limit_scalar: error failed to decrease along the sequence");
    }
  }
  return rows;
}

std::vector<LimitRow> log_limit_check(const ksat::KSatInstance& inst, double temperature,
                                      std::span<const double> r_seq, int max_n) {
  double log_z = thermo::partition_function(inst, temperature, max_n).log_z;
  return log_limit_scalar(log_z, r_seq);
}

double clause_average_weight(const ColumnHistogram& histogram, int k, double temperature) {
  check_replica_count(histogram.r, 20, "clause_average_weight");
  check_temperature(temperature, "clause_average_weight");
  if (k < 1) throw std::invalid_argument("clause_average_weight: k must be >= 1");
  if (k > 20) throw CapacityError("clause_average_weight: 2^k sign patterns, k <= 20");
  const std::uint64_t n = histogram.sites();
  if (n < static_cast<std::uint64_t>(k)) {
    throw std::invalid_argument("clause_average_weight: histogram has fewer than k sites");
  }
  if (std::isinf(temperature)) return 1.0;  // every violation pattern has weight 1

  const int r = histogram.r;
  const std::uint32_t full = static_cast<std::uint32_t>((std::uint64_t{1} << r) - 1);
  const std::vector<double> viol = violation_weights(r, temperature);
  const double log_total = log_binomial(static_cast<double>(n), k);
  const double sign_norm = std::ldexp(1.0, -k);  // 2^-k

  // Average of exp(-violations/T) over the 2^k sign patterns for a fixed
  // multiset of column types; the set of replicas violating the clause is
  // the AND of the per-literal "false for" masks.
  std::vector<std::uint32_t> type_stack(k);
  auto sign_average = [&](int count) {
    double sum = 0.0;
    for (std::uint32_t signs = 0; signs < (std::uint32_t{1} << count); ++signs) {
      std::uint32_t violating = full;
      for (int j = 0; j < count; ++j) {
        std::uint32_t t = type_stack[j];
        violating &= (signs >> j & 1) ? t : static_cast<std::uint32_t>(~t) & full;
      }
      sum += viol[std::popcount(violating)];
    }
    return sum * sign_norm;
  };

  const std::size_t types = histogram.counts.size();
  double weight = 0.0;
  // Multisets c with c_t <= N_t, sum c_t = k; the subset-count factor
  // prod_t C(N_t, c_t) / C(n, k) is the multivariate hypergeometric mass.
  std::function<void(std::size_t, int, double, int)> recurse =
      [&](std::size_t type, int remaining, double log_coeff, int depth) {
        if (remaining == 0) {
          weight += std::exp(log_coeff - log_total) * sign_average(depth);
          return;
        }
        if (type == types) return;
        std::uint64_t avail = histogram.counts[type];
        std::uint64_t take_max = std::min<std::uint64_t>(avail, remaining);
        for (std::uint64_t c = 0; c <= take_max; ++c) {
          if (c > 0) {
            for (std::uint64_t j = 0; j < c; ++j) {
              type_stack[depth + j] = static_cast<std::uint32_t>(type);
            }
          }
          recurse(type + 1, remaining - static_cast<int>(c),
                  c == 0 ? log_coeff
                         : log_coeff + log_binomial(static_cast<double>(avail),
                                                    static_cast<double>(c)),
                  depth + static_cast<int>(c));
        }
      };
  recurse(0, k, 0.0, 0);
  return weight;
}

const char* method_name(MomentMethod method) {
  switch (method) {
    case MomentMethod::HistogramExact: return "histogram-exact";
    case MomentMethod::BruteforceExact: return "bruteforce-exact";
    case MomentMethod::EnsembleExact: return "ensemble-exact";
    case MomentMethod::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

MomentResult moment_exact_histogram(const ksat::EnsembleParams& params, int r, int workers,
                                    double max_terms) {
  params.validate();
  check_replica_count(r, 12, "moment_exact_histogram");
  check_temperature(params.temperature, "moment_exact_histogram");
  const int n = params.n;
  const int m = params.clause_count();
  const std::size_t types = std::size_t{1} << r;

  mpz_class term_count;
  mpz_bin_uiui(term_count.get_mpz_t(), static_cast<unsigned long>(n) + types - 1,
               static_cast<unsigned long>(types) - 1);
  if (term_count > mpz_class(max_terms)) {
    throw CapacityError("moment_exact_histogram: " + term_count.get_str() +
                        " histograms exceed the " + format_double(max_terms) + " term guard");
  }

  const double log_gamma_n1 = gammafn::log_gamma(static_cast<double>(n) + 1.0);
  auto leaf_term = [&](const std::vector<std::uint64_t>& counts, double sum_log_fact) {
    double log_multinomial = log_gamma_n1 - sum_log_fact;
    if (m == 0) return log_multinomial;
    double w = clause_average_weight(ColumnHistogram{r, counts}, params.k,
                                     params.temperature);
    return log_multinomial + static_cast<double>(m) * std::log(w);
  };

  // Fixed blocks by the first histogram entry, merged in order, so the
  // result does not depend on the worker count.
  std::vector<LogSumAccumulator> block_acc(static_cast<std::size_t>(n) + 1);
  if (types == 1) {
    std::vector<std::uint64_t> counts{static_cast<std::uint64_t>(n)};
    block_acc[0].add(leaf_term(counts, gammafn::log_gamma(static_cast<double>(n) + 1.0)));
  } else {
    parallel_for_indexed(static_cast<std::size_t>(n) + 1, workers, [&](std::size_t first) {
      std::vector<std::uint64_t> counts(types, 0);
      counts[0] = first;
      double base = gammafn::log_gamma(static_cast<double>(first) + 1.0);
      std::function<void(std::size_t, int, double)> recurse = [&](std::size_t type,
                                                                  int remaining,
                                                                  double sum_log_fact) {
        if (type == types - 1) {
          counts[type] = remaining;
          block_acc[first].add(leaf_term(
              counts, sum_log_fact + gammafn::log_gamma(static_cast<double>(remaining) + 1.0)));
          return;
        }
        for (int c = 0; c <= remaining; ++c) {
          counts[type] = c;
          recurse(type + 1, remaining - c,
                  sum_log_fact + gammafn::log_gamma(static_cast<double>(c) + 1.0));
        }
      };
      recurse(1, n - static_cast<int>(first), base);
    });
  }
  LogSumAccumulator acc;
  for (const auto& block : block_acc) acc.merge(block);

  return MomentResult{acc.value(), MomentMethod::HistogramExact, params, r};
}

MomentResult moment_bruteforce(const ksat::EnsembleParams& params, int r, int max_rn) {
  params.validate();
  check_replica_count(r, 20, "moment_bruteforce");
  check_temperature(params.temperature, "moment_bruteforce");
  const int n = params.n;
  const int m = params.clause_count();
  long long rn = static_cast<long long>(r) * n;
  if (rn > max_rn) {
    throw CapacityError("moment_bruteforce: 2^" + std::to_string(rn) +
                        " replica configurations (limit 2^" + std::to_string(max_rn) + ")");
  }

  const std::uint64_t states = std::uint64_t{1} << n;
  const std::size_t types = std::size_t{1} << r;
  std::vector<std::uint64_t> digits(static_cast<std::size_t>(std::max(r, 1)), 0);
  std::vector<std::uint64_t> counts(types, 0);
  std::map<std::vector<std::uint64_t>, double> weight_memo;

  LogSumAccumulator acc;
  while (true) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      std::uint32_t mask = 0;
      for (int a = 0; a < r; ++a) {
        if (digits[a] >> i & 1) mask |= std::uint32_t{1} << a;
      }
      ++counts[mask];
    }
    if (m == 0) {
      acc.add(0.0);
    } else {
      auto [it, inserted] = weight_memo.try_emplace(counts, 0.0);
      if (inserted) {
        it->second = clause_average_weight(ColumnHistogram{r, counts}, params.k,
                                           params.temperature);
      }
      acc.add(static_cast<double>(m) * std::log(it->second));
    }
    if (r == 0) break;
    int pos = 0;
    while (pos < r && ++digits[pos] == states) digits[pos++] = 0;
    if (pos == r) break;
  }
  return MomentResult{acc.value(), MomentMethod::BruteforceExact, params, r};
}

MomentResult moment_ensemble_enum(const ksat::EnsembleParams& params, int r,
                                  double max_instances) {
  params.validate();
  if (r < 0) throw std::invalid_argument("moment_ensemble_enum: r must be >= 0");
  if (!std::isfinite(params.temperature) || params.temperature <= 0.0) {
    throw std::invalid_argument("moment_ensemble_enum: temperature must be finite and > 0");
  }
  const int n = params.n;
  const int k = params.k;
  const int m = params.clause_count();

  // All possible clauses: every k-subset with every sign pattern.
  std::vector<ksat::Clause> clause_types;
  if (m > 0) {
    std::vector<int> subset(k);
    std::function<void(int, int)> choose = [&](int start, int depth) {
      if (depth == k) {
        for (std::uint32_t signs = 0; signs < (std::uint32_t{1} << k); ++signs) {
          ksat::Clause clause(k);
          for (int j = 0; j < k; ++j) {
            clause[j] = ksat::Literal{subset[j], (signs >> j & 1) ? 1 : -1};
          }
          clause_types.push_back(std::move(clause));
        }
        return;
      }
      for (int v = start; v <= n - (k - depth); ++v) {
        subset[depth] = v;
        choose(v + 1, depth + 1);
      }
    };
    choose(0, 0);
  }

  const double type_count = clause_types.empty() ? 1.0 : static_cast<double>(clause_types.size());
  double log_instances = m * std::log(type_count);
  if (log_instances > std::log(max_instances)) {
    throw CapacityError("moment_ensemble_enum: " + format_double(std::exp(log_instances)) +
                        " instances exceed the " + format_double(max_instances) + " guard");
  }
  if (std::exp(log_instances) * std::ldexp(1.0, n) > 1e8) {
    throw CapacityError("moment_ensemble_enum: total enumeration work exceeds guard");
  }

  std::vector<std::size_t> digits(static_cast<std::size_t>(std::max(m, 1)), 0);
  std::uint64_t instance_count = 0;
  LogSumAccumulator acc;
  std::vector<ksat::Clause> clauses(m);
  while (true) {
    for (int j = 0; j < m; ++j) clauses[j] = clause_types[digits[j]];
    ksat::KSatInstance inst(n, m > 0 ? k : 0, clauses);
    double log_z = thermo::partition_function(inst, params.temperature, n).log_z;
    acc.add(static_cast<double>(r) * log_z);
    ++instance_count;
    if (m == 0) break;
    int pos = 0;
    while (pos < m && ++digits[pos] == clause_types.size()) digits[pos++] = 0;
    if (pos == m) break;
  }
  double log_moment = acc.value() - std::log(static_cast<double>(instance_count));
  return MomentResult{log_moment, MomentMethod::EnsembleExact, params, r};
}

MomentResult moment_monte_carlo(const ksat::EnsembleParams& params, int r, int samples,
                                int workers, int max_n) {
  params.validate();
  if (r < 0) throw std::invalid_argument("moment_monte_carlo: r must be >= 0");
  if (samples <= 0) throw std::invalid_argument("moment_monte_carlo: samples must be >= 1");
  std::vector<double> log_zr(samples);
  parallel_for_indexed(samples, workers, [&](std::size_t i) {
    auto inst =
        ksat::generate_instance(params.with_seed(derive_stream_seed(params.seed, i)));
    log_zr[i] =
        static_cast<double>(r) * thermo::partition_function(inst, params.temperature, max_n).log_z;
  });
  double log_moment = log_sum_exp(log_zr) - std::log(static_cast<double>(samples));
  return MomentResult{log_moment, MomentMethod::MonteCarlo, params, r};
}

namespace {

// Distribution of the running AND of per-literal "false for" masks, under
// i.i.d. column types u and uniform signs. One literal contributes mask t
// (negated literal) or ~t (plain) with probability u_t / 2 each.
struct WeightDistributions {
  std::vector<double> after_k;        // P_k
  std::vector<double> after_k_minus;  // P_{k-1}
};

std::vector<double> and_convolve(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] == 0.0) continue;
    for (std::size_t b = 0; b < q.size(); ++b) {
      out[a & b] += p[a] * q[b];
    }
  }
  return out;
}

WeightDistributions literal_mask_distributions(const OrderParameter& u, int k) {
  const std::size_t size = u.u.size();
  const std::size_t full = size - 1;
  std::vector<double> q(size);
  for (std::size_t t = 0; t < size; ++t) q[t] = 0.5 * (u.u[t] + u.u[full ^ t]);
  std::vector<double> p(size, 0.0);
  p[full] = 1.0;  // AND identity
  WeightDistributions dist;
  for (int j = 0; j < k; ++j) {
    if (j == k - 1) dist.after_k_minus = p;
    p = and_convolve(p, q);
  }
  dist.after_k = std::move(p);
  return dist;
}

double weight_from_distribution(const std::vector<double>& p, const std::vector<double>& viol) {
  double w = 0.0;
  for (std::size_t mask = 0; mask < p.size(); ++mask) {
    w += p[mask] * viol[std::popcount(mask)];
  }
  return w;
}

void check_rate_args(const OrderParameter& u, double alpha, int k, double temperature) {
  u.validate();
  check_replica_count(u.r, 10, "rate_function");
  check_temperature(temperature, "rate_function");
  if (alpha < 0.0) throw std::invalid_argument("rate_function: alpha must be >= 0");
  if (k < 1) throw std::invalid_argument("rate_function: k must be >= 1");
}

double entropy_term(const std::vector<double>& u) {
  double h = 0.0;
  for (double x : u) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

}  // namespace

double rate_function(const OrderParameter& u, double alpha, int k, double temperature) {
  check_rate_args(u, alpha, k, temperature);
  double entropy = entropy_term(u.u);
  if (alpha == 0.0) return entropy;
  auto dist = literal_mask_distributions(u, k);
  double w = weight_from_distribution(dist.after_k, violation_weights(u.r, temperature));
  return entropy + alpha * std::log(w);
}

std::vector<double> rate_gradient(const OrderParameter& u, double alpha, int k,
                                  double temperature) {
  check_rate_args(u, alpha, k, temperature);
  const std::size_t size = u.u.size();
  const std::size_t full = size - 1;
  std::vector<double> grad(size);
  for (std::size_t t = 0; t < size; ++t) {
    grad[t] = -std::log(std::max(u.u[t], 1e-300)) - 1.0;
  }
  if (alpha == 0.0) return grad;

  auto dist = literal_mask_distributions(u, k);
  std::vector<double> viol = violation_weights(u.r, temperature);
  double w = weight_from_distribution(dist.after_k, viol);
  for (std::size_t t = 0; t < size; ++t) {
    double dw = 0.0;
    for (std::size_t mask = 0; mask < size; ++mask) {
      double p = dist.after_k_minus[mask];
      if (p == 0.0) continue;
      dw += p * (viol[std::popcount(mask & t)] + viol[std::popcount(mask & (full ^ t))]);
    }
    dw *= 0.5 * static_cast<double>(k);
    grad[t] += alpha * dw / w;
  }
  return grad;
}

const char* ansatz_name(Ansatz ansatz) {
  switch (ansatz) {
    case Ansatz::FullSimplex: return "full-simplex";
    case Ansatz::ReplicaSymmetric: return "replica-symmetric";
  }
  return "?";
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  int support = 0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) {
      theta = candidate;
      support = static_cast<int>(j + 1);
    }
  }
  (void)support;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

OrderParameter random_simplex_point(int r, SplitMix64& rng) {
  check_replica_count(r, 20, "random_simplex_point");
  std::size_t size = std::size_t{1} << r;
  std::vector<double> u(size);
  double sum = 0.0;
  for (double& x : u) {
    x = -std::log(rng.unit());
    sum += x;
  }
  for (double& x : u) x /= sum;
  return OrderParameter{r, std::move(u)};
}

OrderParameter expand_replica_symmetric(std::span<const double> class_weights, int r) {
  if (static_cast<int>(class_weights.size()) != r + 1) {
    throw std::invalid_argument("expand_replica_symmetric: need r + 1 class weights");
  }
  std::size_t size = std::size_t{1} << r;
  std::vector<double> u(size);
  for (std::size_t mask = 0; mask < size; ++mask) {
    int c = std::popcount(mask);
    u[mask] = class_weights[c] / static_cast<double>(binomial_u64(r, c));
  }
  return OrderParameter{r, std::move(u)};
}

OrderParameter permute_replicas(const OrderParameter& u, std::span<const int> perm) {
  u.validate(1e-6);
  if (static_cast<int>(perm.size()) != u.r) {
    throw std::invalid_argument("permute_replicas: permutation size must equal r");
  }
  std::vector<bool> seen(u.r, false);
  for (int p : perm) {
    if (p < 0 || p >= u.r || seen[p]) {
      throw std::invalid_argument("permute_replicas: not a permutation");
    }
    seen[p] = true;
  }
  // (u o pi)[sigma] = u[sigma o pi]: component a of the source index is
  // sigma_{pi(a)}.
  std::size_t size = u.u.size();
  std::vector<double> result(size);
  for (std::size_t mask = 0; mask < size; ++mask) {
    std::size_t source = 0;
    for (int a = 0; a < u.r; ++a) {
      if (mask >> perm[a] & 1) source |= std::size_t{1} << a;
    }
    result[mask] = u.u[source];
  }
  return OrderParameter{u.r, std::move(result)};
}

OrderParameter flip_spins(const OrderParameter& u) {
  std::size_t size = u.u.size();
  std::vector<double> out(size);
  for (std::size_t mask = 0; mask < size; ++mask) out[mask] = u.u[size - 1 - mask];
  return OrderParameter{u.r, std::move(out)};
}

bool check_replica_permutation_symmetry(const OrderParameter& u, double alpha, int k,
                                        double temperature, int trials, std::uint64_t seed,
                                        double rel_tol) {
  double reference = rate_function(u, alpha, k, temperature);
  double tol = rel_tol * std::max(1.0, std::fabs(reference));
  SplitMix64 rng(seed);
  std::vector<int> perm(u.r);
  for (int trial = 0; trial < trials; ++trial) {
    for (int i = 0; i < u.r; ++i) perm[i] = i;
    for (int i = u.r - 1; i > 0; --i) {
      int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    double permuted = rate_function(permute_replicas(u, perm), alpha, k, temperature);
    if (std::fabs(permuted - reference) > tol) return false;
  }
  return true;
}

namespace {

struct AscentResult {
  std::vector<double> x;
  double f = -kInf;
  int iterations = 0;
  double pg_norm = kInf;
  bool converged = false;
};

// Projected gradient ascent on the simplex with backtracking; the
// convergence measure is the norm of proj(x + g) - x, which vanishes
// exactly at KKT points.
AscentResult ascend(const std::function<double(const std::vector<double>&)>& f,
                    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                    std::vector<double> x0, int max_iterations, double tolerance) {
  AscentResult res;
  res.x = project_to_simplex(x0);
  res.f = f(res.x);
  double step = 1.0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter + 1;
    std::vector<double> g = grad(res.x);
    std::vector<double> moved(res.x.size());
    for (std::size_t i = 0; i < g.size(); ++i) moved[i] = res.x[i] + g[i];
    std::vector<double> pg_point = project_to_simplex(moved);
    double pg_norm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double d = pg_point[i] - res.x[i];
      pg_norm += d * d;
    }
    res.pg_norm = std::sqrt(pg_norm);
    if (res.pg_norm < tolerance) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    double eta = std::min(step * 4.0, 1e6);
    while (eta > 1e-18) {
      std::vector<double> trial(res.x.size());
      for (std::size_t i = 0; i < g.size(); ++i) trial[i] = res.x[i] + eta * g[i];
      trial = project_to_simplex(trial);
      double ft = f(trial);
      if (ft > res.f) {
        res.x = std::move(trial);
        res.f = ft;
        step = eta;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // stalled: no ascent direction at float resolution
  }
  return res;
}

// Plain Nelder-Mead maximization; used as a derivative-free fallback in
// softmax coordinates when ascent stalls away from tolerance.
std::vector<double> nelder_mead_max(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, int max_evals) {
  const std::size_t dim = start.size();
  std::vector<std::vector<double>> simplex(dim + 1, start);
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += 0.25;
  std::vector<double> value(dim + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= dim; ++i) {
    value[i] = f(simplex[i]);
    ++evals;
  }
  std::vector<std::size_t> order(dim + 1);
  while (evals < max_evals) {
    for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });
    if (value[order.front()] - value[order.back()] < 1e-13) break;
    std::size_t worst = order.back();
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        p[d] = centroid[d] + t * (centroid[d] - simplex[worst][d]);
      }
      return p;
    };
    std::vector<double> reflected = blend(1.0);
    double fr = f(reflected);
    ++evals;
    if (fr > value[order.front()]) {
      std::vector<double> expanded = blend(2.0);
      double fe = f(expanded);
      ++evals;
      if (fe > fr) {
        simplex[worst] = std::move(expanded);
        value[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        value[worst] = fr;
      }
    } else if (fr > value[order[dim - 1]]) {
      simplex[worst] = std::move(reflected);
      value[worst] = fr;
    } else {
      std::vector<double> contracted = blend(-0.5);
      double fc = f(contracted);
      ++evals;
      if (fc > value[worst]) {
        simplex[worst] = std::move(contracted);
        value[worst] = fc;
      } else {
        const std::vector<double>& best = simplex[order.front()];
        for (std::size_t i = 0; i <= dim; ++i) {
          if (i == order.front()) continue;
          for (std::size_t d = 0; d < dim; ++d) {
            simplex[i][d] = best[d] + 0.5 * (simplex[i][d] - best[d]);
          }
          value[i] = f(simplex[i]);
          ++evals;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= dim; ++i) {
    if (value[i] > value[best]) best = i;
  }
  return simplex[best];
}

std::vector<double> softmax(const std::vector<double>& theta) {
  double mx = *std::max_element(theta.begin(), theta.end());
  std::vector<double> out(theta.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out[i] = std::exp(theta[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

AscentResult multi_start_ascend(
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<std::vector<double>(const std::vector<double>&)>& grad,
    const std::vector<std::vector<double>>& starts, const SaddleOptions& options) {
  AscentResult best;
  for (const auto& start : starts) {
    AscentResult res = ascend(f, grad, start, options.max_iterations, options.tolerance);
    if (!res.converged && res.x.size() <= 32) {
      // Derivative-free polish in unconstrained softmax coordinates, then a
      // short re-ascent from the polished point.
      std::vector<double> theta(res.x.size());
      for (std::size_t i = 0; i < res.x.size(); ++i) {
        theta[i] = std::log(std::max(res.x[i], 1e-12));
      }
      auto f_soft = [&](const std::vector<double>& th) { return f(softmax(th)); };
      std::vector<double> polished =
          nelder_mead_max(f_soft, theta, 400 * static_cast<int>(res.x.size()));
      AscentResult second =
          ascend(f, grad, softmax(polished), options.max_iterations, options.tolerance);
      second.iterations += res.iterations;
      if (second.f > res.f) res = std::move(second);
    }
    if (res.f > best.f) best = std::move(res);
  }
  return best;
}

}  // namespace

SaddleResult saddle_maximize(double alpha, int k, double temperature, int r, Ansatz ansatz,
                             const SaddleOptions& options) {
  if (r < 1) throw std::invalid_argument("saddle_maximize: r must be >= 1");
  check_replica_count(r, 10, "saddle_maximize");
  check_temperature(temperature, "saddle_maximize");
  if (alpha < 0.0) throw std::invalid_argument("saddle_maximize: alpha must be >= 0");
  if (k < 1) throw std::invalid_argument("saddle_maximize: k must be >= 1");

  const std::size_t size = std::size_t{1} << r;
  SplitMix64 rng(options.seed);

  auto f_full = [&](const std::vector<double>& u) {
    return rate_function(OrderParameter{r, u}, alpha, k, temperature);
  };
  auto g_full = [&](const std::vector<double>& u) {
    return rate_gradient(OrderParameter{r, u}, alpha, k, temperature);
  };

  // Replica-symmetric slice, parameterized by the class masses
  // w_c = C(r,c) v_c which themselves live on an (r+1)-simplex.
  auto expand = [&](const std::vector<double>& w) {
    return expand_replica_symmetric(w, r).u;
  };
  auto f_rs = [&](const std::vector<double>& w) { return f_full(expand(w)); };
  auto g_rs = [&](const std::vector<double>& w) {
    std::vector<double> gu = g_full(expand(w));
    std::vector<double> gw(static_cast<std::size_t>(r) + 1, 0.0);
    for (std::size_t mask = 0; mask < size; ++mask) {
      int c = std::popcount(mask);
      gw[c] += gu[mask] / static_cast<double>(binomial_u64(r, c));
    }
    return gw;
  };

  auto rs_starts = [&]() {
    std::vector<std::vector<double>> starts;
    std::vector<double> uniform(static_cast<std::size_t>(r) + 1);
    for (int c = 0; c <= r; ++c) {
      uniform[c] = static_cast<double>(binomial_u64(r, c)) / static_cast<double>(size);
    }
    starts.push_back(uniform);
    for (int c = 0; c <= r; ++c) {
      std::vector<double> corner(static_cast<std::size_t>(r) + 1, 0.1 / (r + 1.0));
      corner[c] += 0.9;
      starts.push_back(project_to_simplex(corner));
    }
    for (int s = 0; s < options.random_starts; ++s) {
      std::vector<double> w(static_cast<std::size_t>(r) + 1);
      double sum = 0.0;
      for (double& x : w) {
        x = -std::log(rng.unit());
        sum += x;
      }
      for (double& x : w) x /= sum;
      starts.push_back(std::move(w));
    }
    return starts;
  };

  AscentResult rs_best = multi_start_ascend(f_rs, g_rs, rs_starts(), options);

  if (ansatz == Ansatz::ReplicaSymmetric) {
    SaddleResult out;
    out.u_star = OrderParameter{r, expand(rs_best.x)};
    out.f_max = rs_best.f;
    out.ansatz = ansatz;
    out.iterations = rs_best.iterations;
    out.grad_norm = rs_best.pg_norm;
    out.converged = rs_best.converged;
    return out;
  }

  std::vector<std::vector<double>> starts;
  starts.push_back(std::vector<double>(size, 1.0 / static_cast<double>(size)));
  starts.push_back(expand(rs_best.x));  // makes full-simplex f_max >= RS f_max structural
  int corner_count = static_cast<int>(std::min<std::size_t>(size, 8));
  for (int i = 0; i < corner_count; ++i) {
    std::size_t t = size * static_cast<std::size_t>(i) / corner_count;
    std::vector<double> corner(size, 0.1 / static_cast<double>(size));
    corner[t] += 0.9;
    starts.push_back(project_to_simplex(corner));
  }
  for (int s = 0; s < options.random_starts; ++s) {
    starts.push_back(random_simplex_point(r, rng).u);
  }

  AscentResult full_best = multi_start_ascend(f_full, g_full, starts, options);
  SaddleResult out;
  out.u_star = OrderParameter{r, full_best.x};
  out.f_max = full_best.f;
  out.ansatz = ansatz;
  out.iterations = full_best.iterations;
  out.grad_norm = full_best.pg_norm;
  out.converged = full_best.converged;
  return out;
}

}  // namespace replica_lab::moments
