#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "replica_lab/errors.hpp"
#include "replica_lab/ksat.hpp"
#include "replica_lab/moments.hpp"
#include "replica_lab/rng.hpp"
#include "replica_lab/thermo.hpp"

using namespace replica_lab;
using ksat::EnsembleParams;
using ksat::KSatInstance;
using moments::ColumnHistogram;
using moments::OrderParameter;
using moments::ReplicaConfig;

namespace {

KSatInstance random_instance(int n, int k, int m, std::uint64_t seed) {
  EnsembleParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  p.seed = seed;
  return ksat::generate_instance(p);
}

EnsembleParams make_params(int n, int k, int m, double temperature, std::uint64_t seed = 0) {
  EnsembleParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  p.temperature = temperature;
  p.seed = seed;
  return p;
}

OrderParameter interior_point(int r, SplitMix64& rng) {
  auto u = moments::random_simplex_point(r, rng);
  double mix = 0.3 / static_cast<double>(u.u.size());
  for (double& x : u.u) x = 0.7 * x + mix;
  return u;
}

}  // namespace

TEST_CASE("replicated partition: factorization identity and conventions") {
  auto inst = random_instance(4, 2, 6, 21);
  double log_z = thermo::partition_function(inst, 1.0).log_z;

  CHECK(moments::replicated_partition_log(inst, 0, 1.0) == 0.0);
  CHECK(moments::replicated_partition_log(inst, 1, 1.0) ==
        doctest::Approx(log_z).epsilon(1e-14));
  CHECK(moments::replicated_partition_log(inst, 2, 1.0) ==
        doctest::Approx(2.0 * log_z).epsilon(1e-10));
  CHECK(moments::replicated_partition_log(inst, 3, 1.0) ==
        doctest::Approx(3.0 * log_z).epsilon(1e-10));

  auto big = random_instance(12, 3, 20, 2);
  CHECK_THROWS_AS(moments::replicated_partition_log(big, 2, 1.0), CapacityError);
}

TEST_CASE("scalar (Z^r - 1)/r limit table") {
  double rs[] = {1.0, 0.1, 0.01};
  auto rows = moments::log_limit_scalar(1.0, rs);  // Z = e
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].estimate == doctest::Approx(1.7182818284590452).epsilon(1e-14));
  CHECK(rows[1].estimate == doctest::Approx(1.0517091807564771).epsilon(1e-13));
  CHECK(rows[2].estimate == doctest::Approx(1.0050167084168057).epsilon(1e-13));

  // Z = 1 is the fixed point: the quotient is 0 at every r
  auto zero_rows = moments::log_limit_scalar(0.0, rs);
  for (const auto& row : zero_rows) {
    CHECK(row.estimate == 0.0);
    CHECK(row.abs_error == 0.0);
  }

  CHECK_THROWS_AS(moments::log_limit_scalar(1.0, std::vector<double>{0.1, 0.2}),
                  std::invalid_argument);  // not decreasing
  CHECK_THROWS_AS(moments::log_limit_scalar(1.0, std::vector<double>{0.1, -0.2}),
                  std::invalid_argument);
}

TEST_CASE("limit table on instances: monotone error with a second-order bound") {
  KSatInstance empty(0, 0, {});
  double decades[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  auto rows = moments::log_limit_check(empty, 1.0, decades);
  for (const auto& row : rows) CHECK(row.abs_error == 0.0);  // Z = 1 exactly

  SplitMix64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(8, 3, 10 + static_cast<int>(rng.below(30)), rng.next());
    double t = 0.5 + 2.0 * rng.unit();
    double log_z = thermo::partition_function(inst, t).log_z;
    auto table = moments::log_limit_check(inst, t, decades);
    for (std::size_t i = 1; i < table.size(); ++i) {
      CHECK(table[i].abs_error <= table[i - 1].abs_error);
    }
    CHECK(table.back().abs_error <= 1e-5 * log_z * log_z);
  }
}

TEST_CASE("column histograms") {
  ReplicaConfig all_up{1, 5, std::vector<std::int8_t>(5, 1)};
  auto hist = moments::column_histogram(all_up);
  REQUIRE(hist.counts.size() == 2);
  CHECK(hist.counts[0] == 0);
  CHECK(hist.counts[1] == 5);

  // columns (+,+), (+,-), (+,-)
  ReplicaConfig two{2, 3, {1, 1, 1, 1, -1, -1}};
  auto hist2 = moments::column_histogram(two);
  CHECK(hist2.counts[3] == 1);  // (+,+)
  CHECK(hist2.counts[1] == 2);  // (+,-) ... replica 0 bit set
  CHECK(hist2.sites() == 3);

  // invariant under permuting sites
  SplitMix64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    int r = 1 + static_cast<int>(rng.below(3));
    int n = 3 + static_cast<int>(rng.below(6));
    ReplicaConfig config{r, n, {}};
    config.spins.resize(static_cast<std::size_t>(r) * n);
    for (auto& s : config.spins) s = rng.coin() ? 1 : -1;
    auto base = moments::column_histogram(config);

    std::vector<int> site_order(n);
    std::iota(site_order.begin(), site_order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(site_order[i], site_order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    ReplicaConfig shuffled{r, n, std::vector<std::int8_t>(config.spins.size())};
    for (int a = 0; a < r; ++a) {
      for (int i = 0; i < n; ++i) {
        shuffled.spins[a * n + i] = config.spin(a, site_order[i]);
      }
    }
    CHECK(moments::column_histogram(shuffled).counts == base.counts);
  }
}

TEST_CASE("clause average weight: limits and the direct clause oracle") {
  ColumnHistogram hist{1, {1, 2}};  // one spin-down site, two spin-up sites

  CHECK(moments::clause_average_weight(hist, 2, std::numeric_limits<double>::infinity()) == 1.0);

  ColumnHistogram empty_types{0, {3}};  // r = 0: nothing can be violated
  CHECK(moments::clause_average_weight(empty_types, 2, 1.0) == 1.0);

  // direct enumeration over all C(3,2) * 4 = 12 clauses on a concrete
  // configuration with this histogram
  std::int8_t spins[3] = {-1, 1, 1};
  const double t = 1.0;
  double oracle = 0.0;
  int clause_count = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      for (int signs = 0; signs < 4; ++signs) {
        int sign_i = (signs & 1) ? 1 : -1;
        int sign_j = (signs & 2) ? 1 : -1;
        bool violated = spins[i] != sign_i && spins[j] != sign_j;
        oracle += std::exp(-(violated ? 1.0 : 0.0) / t);
        ++clause_count;
      }
    }
  }
  oracle /= clause_count;
  CHECK(clause_count == 12);
  CHECK(moments::clause_average_weight(hist, 2, t) == doctest::Approx(oracle).epsilon(1e-13));

  CHECK_THROWS_AS(moments::clause_average_weight(hist, 4, 1.0), std::invalid_argument);  // n < k
}

TEST_CASE("histogram moment: free and infinite-temperature forms") {
  auto p0 = make_params(5, 2, 0, 1.0);
  CHECK(moments::moment_exact_histogram(p0, 1).log_moment ==
        doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-13));

  auto p_inf = make_params(4, 2, 6, std::numeric_limits<double>::infinity());
  CHECK(moments::moment_exact_histogram(p_inf, 3).log_moment ==
        doctest::Approx(12.0 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("histogram moment equals replica-configuration brute force") {
  auto params = make_params(4, 2, 3, 1.0);
  double hist = moments::moment_exact_histogram(params, 2).log_moment;
  double brute = moments::moment_bruteforce(params, 2).log_moment;
  CHECK(std::fabs(hist - brute) <= 1e-9);

  SplitMix64 rng(9);
  for (int trial = 0; trial < 12; ++trial) {
    int n = 1 + static_cast<int>(rng.below(5));
    int k = 1 + static_cast<int>(rng.below(std::min(n, 3)));
    int m = static_cast<int>(rng.below(4));
    int r = static_cast<int>(rng.below(3));
    double t = 0.4 + 2.0 * rng.unit();
    auto p = make_params(n, k, m, t);
    CHECK(std::fabs(moments::moment_exact_histogram(p, r).log_moment -
                    moments::moment_bruteforce(p, r).log_moment) <= 1e-9);
  }
}

TEST_CASE("histogram moment is independent of the worker count") {
  auto params = make_params(12, 2, 12, 1.0);
  auto serial = moments::moment_exact_histogram(params, 2, 1);
  auto parallel = moments::moment_exact_histogram(params, 2, 4);
  CHECK(serial.log_moment == parallel.log_moment);
}

TEST_CASE("full instance-ensemble enumeration agrees") {
  auto params = make_params(2, 1, 2, 1.0);
  for (int r : {1, 2}) {
    double ens = moments::moment_ensemble_enum(params, r).log_moment;
    double brute = moments::moment_bruteforce(params, r).log_moment;
    double hist = moments::moment_exact_histogram(params, r).log_moment;
    CHECK(std::fabs(ens - brute) <= 1e-9);
    CHECK(std::fabs(ens - hist) <= 1e-9);
  }
}

TEST_CASE("r = 0 moment is exactly 1") {
  auto params = make_params(3, 2, 2, 1.0);
  CHECK(moments::moment_bruteforce(params, 0).log_moment == 0.0);
  CHECK(std::fabs(moments::moment_exact_histogram(params, 0).log_moment) <= 1e-12);
  CHECK(std::fabs(moments::moment_ensemble_enum(params, 0).log_moment) <= 1e-12);
}

TEST_CASE("moments are log-convex in r") {
  SplitMix64 rng(33);
  for (int trial = 0; trial < 8; ++trial) {
    int n = 2 + static_cast<int>(rng.below(4));
    int k = 1 + static_cast<int>(rng.below(2));
    int m = 1 + static_cast<int>(rng.below(3));
    double t = 0.4 + 2.0 * rng.unit();
    auto p = make_params(n, k, m, t);
    double m0 = 0.0;
    double m1 = moments::moment_exact_histogram(p, 1).log_moment;
    double m2 = moments::moment_exact_histogram(p, 2).log_moment;
    double m3 = moments::moment_exact_histogram(p, 3).log_moment;
    CHECK(m2 >= 2.0 * m1 - 1e-10);       // E[Z^2] >= E[Z]^2
    CHECK(m0 + m2 >= 2.0 * m1 - 1e-10);  // log-convexity triples
    CHECK(m1 + m3 >= 2.0 * m2 - 1e-10);
  }
}

TEST_CASE("Monte Carlo moment approaches the exact one") {
  auto params = make_params(6, 2, 6, 1.0, 42);
  double exact = moments::moment_exact_histogram(params, 2).log_moment;
  double mc = moments::moment_monte_carlo(params, 2, 4000, 4).log_moment;
  CHECK(std::fabs(mc - exact) <= 0.1);
  auto serial = moments::moment_monte_carlo(params, 2, 500, 1);
  auto parallel = moments::moment_monte_carlo(params, 2, 500, 3);
  CHECK(serial.log_moment == parallel.log_moment);
}

TEST_CASE("rate function basics") {
  auto uniform = OrderParameter::uniform(2);
  CHECK(moments::rate_function(uniform, 0.0, 2, 1.0) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));

  // infinite temperature: pure entropy, maximized by the uniform point
  double f_uniform =
      moments::rate_function(uniform, 1.5, 2, std::numeric_limits<double>::infinity());
  CHECK(f_uniform == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto u = moments::random_simplex_point(2, rng);
    CHECK(moments::rate_function(u, 1.5, 2, std::numeric_limits<double>::infinity()) <=
          f_uniform + 1e-12);
  }

  OrderParameter off{1, {0.7, 0.2}};
  CHECK_THROWS_AS(moments::rate_function(off, 1.0, 2, 1.0), std::invalid_argument);
}

TEST_CASE("rate gradient matches tangent finite differences") {
  SplitMix64 rng(71);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    int r = 1 + static_cast<int>(rng.below(3));
    auto u = interior_point(r, rng);
    double alpha = 0.3 + 2.0 * rng.unit();
    int k = 1 + static_cast<int>(rng.below(3));
    double t = 0.5 + 1.5 * rng.unit();
    auto grad = moments::rate_gradient(u, alpha, k, t);

    std::size_t size = u.u.size();
    std::size_t i = rng.below(size);
    std::size_t j = (i + 1 + rng.below(size - 1)) % size;
    auto plus = u, minus = u;
    plus.u[i] += h;
    plus.u[j] -= h;
    minus.u[i] -= h;
    minus.u[j] += h;
    double fd = (moments::rate_function(plus, alpha, k, t) -
                 moments::rate_function(minus, alpha, k, t)) /
                (2.0 * h);
    CHECK(std::fabs(fd - (grad[i] - grad[j])) <= 1e-5);
  }
}

TEST_CASE("replica permutation and spin-flip symmetry of F") {
  CHECK(moments::check_replica_permutation_symmetry(OrderParameter::uniform(1), 1.0, 2, 1.0, 5));

  SplitMix64 rng(55);
  auto u = moments::random_simplex_point(3, rng);
  CHECK(moments::check_replica_permutation_symmetry(u, 1.2, 2, 0.8, 50));

  double f = moments::rate_function(u, 1.2, 2, 0.8);
  double f_flipped = moments::rate_function(moments::flip_spins(u), 1.2, 2, 0.8);
  CHECK(std::fabs(f - f_flipped) <= 1e-10 * std::max(1.0, std::fabs(f)));

  // an asymmetric u moves under permutation, the value of F does not
  OrderParameter skew{2, {0.55, 0.25, 0.15, 0.05}};
  int perm[] = {1, 0};
  auto permuted = moments::permute_replicas(skew, perm);
  CHECK(permuted.u != skew.u);
  CHECK(std::fabs(moments::rate_function(permuted, 1.0, 2, 1.0) -
                  moments::rate_function(skew, 1.0, 2, 1.0)) <= 1e-12);
}

TEST_CASE("saddle point at alpha = 0 is the uniform entropy maximum") {
  for (auto ansatz : {moments::Ansatz::FullSimplex, moments::Ansatz::ReplicaSymmetric}) {
    auto res = moments::saddle_maximize(0.0, 2, 1.0, 2, ansatz);
    CHECK(res.f_max == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
    for (double x : res.u_star.u) CHECK(x == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(res.converged);
  }
}

TEST_CASE("replica-symmetric expansion is consistent and never beats the full simplex") {
  moments::SaddleOptions opts;
  auto rs = moments::saddle_maximize(1.0, 2, 1.0, 2, moments::Ansatz::ReplicaSymmetric, opts);
  CHECK(moments::rate_function(rs.u_star, 1.0, 2, 1.0) ==
        doctest::Approx(rs.f_max).epsilon(1e-12));

  auto full = moments::saddle_maximize(1.0, 2, 1.0, 2, moments::Ansatz::FullSimplex, opts);
  CHECK(full.f_max >= rs.f_max - 1e-8);

  // RS expansion: class masses spread evenly inside each popcount class
  double class_weights[] = {0.5, 0.3, 0.2};
  auto expanded = moments::expand_replica_symmetric(class_weights, 2);
  expanded.validate(1e-12);
  CHECK(expanded.u[0] == doctest::Approx(0.5));
  CHECK(expanded.u[1] == doctest::Approx(0.15));
  CHECK(expanded.u[2] == doctest::Approx(0.15));
  CHECK(expanded.u[3] == doctest::Approx(0.2));
}

TEST_CASE("simplex projection") {
  auto p1 = moments::project_to_simplex(std::vector<double>{2.0, 0.0});
  CHECK(p1[0] == doctest::Approx(1.0));
  CHECK(p1[1] == doctest::Approx(0.0));

  auto p2 = moments::project_to_simplex(std::vector<double>{0.5, 0.5});
  CHECK(p2[0] == doctest::Approx(0.5));

  auto p3 = moments::project_to_simplex(std::vector<double>{-1.0, 0.4, 0.8});
  double sum = p3[0] + p3[1] + p3[2];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p3[0] == 0.0);
}

TEST_CASE("Laplace principle: (1/n) log moment approaches max F") {
  moments::SaddleOptions opts;
  auto saddle = moments::saddle_maximize(1.0, 2, 1.0, 2, moments::Ansatz::FullSimplex, opts);
  double prev_gap = 1e300;
  for (int n : {4, 8, 12}) {
    auto p = make_params(n, 2, n, 1.0);
    double scaled = moments::moment_exact_histogram(p, 2).log_moment / n;
    double gap = std::fabs(scaled - saddle.f_max);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
}
