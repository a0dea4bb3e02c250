#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "replica_lab/errors.hpp"
#include "replica_lab/ksat.hpp"
#include "replica_lab/rng.hpp"
#include "replica_lab/thermo.hpp"
#include "replica_lab/threshold.hpp"

using namespace replica_lab;
using ksat::EnsembleParams;
using ksat::KSatInstance;
using ksat::Literal;

namespace {

KSatInstance random_instance(int n, int k, int m, std::uint64_t seed) {
  EnsembleParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  p.seed = seed;
  return ksat::generate_instance(p);
}

const KSatInstance kContradiction(1, 1, {{Literal{0, 1}}, {Literal{0, -1}}});

}  // namespace

TEST_CASE("free formula: log Z = n ln 2, ground state fully degenerate") {
  auto inst = random_instance(9, 3, 0, 1);
  CHECK(thermo::partition_function(inst, 1.0).log_z == doctest::Approx(9.0 * std::log(2.0)).epsilon(1e-14));
  auto [e0, deg] = thermo::ground_energy(inst);
  CHECK(e0 == 0);
  CHECK(deg == 512);
  CHECK(thermo::free_energy(inst, 2.0) == doctest::Approx(-2.0 * 9.0 * std::log(2.0)));
  CHECK(thermo::thermal_average_energy(inst, 1.0) == 0.0);
}

TEST_CASE("one unit clause at T = 1: Z = 1 + exp(-1)") {
  KSatInstance inst(1, 1, {{Literal{0, 1}}});
  double log_z = thermo::partition_function(inst, 1.0).log_z;
  CHECK(log_z == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-15));
}

TEST_CASE("high temperature approaches n ln 2") {
  auto inst = random_instance(10, 3, 40, 5);
  double log_z = thermo::partition_function(inst, 1e6).log_z;
  CHECK(std::fabs(log_z - 10.0 * std::log(2.0)) <= 1e-3);
}

TEST_CASE("capacity guard is explicit") {
  auto inst = random_instance(25, 3, 10, 2);
  CHECK_THROWS_AS(thermo::partition_function(inst, 1.0), CapacityError);
  CHECK_THROWS_AS(thermo::ground_energy(inst), CapacityError);
  CHECK_NOTHROW(thermo::ground_energy(inst, 25));  // raised limit
}

TEST_CASE("log-sum-exp matches direct summation for n <= 12") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(rng.below(11));
    auto inst = random_instance(n, 2, 3 * n, rng.next());
    double t = 0.3 + 3.0 * rng.unit();
    auto energies = thermo::config_energies(inst);
    double direct = 0.0;
    for (int e : energies) direct += std::exp(-e / t);
    double log_z = thermo::partition_function(inst, t).log_z;
    CHECK(std::fabs(std::exp(log_z) - direct) / direct <= 1e-12);
  }
}

TEST_CASE("log Z is nondecreasing in T") {
  auto inst = random_instance(10, 3, 35, 8);
  double prev = -1e300;
  for (double t : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    double log_z = thermo::partition_function(inst, t).log_z;
    CHECK(log_z >= prev - 1e-12);
    prev = log_z;
  }
}

TEST_CASE("free energy brackets the ground energy") {
  SplitMix64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(8, 2, 20, rng.next());
    int e0 = thermo::ground_energy(inst).first;
    for (double t : {0.05, 0.25, 1.0, 4.0}) {
      double f = thermo::free_energy(inst, t);
      CHECK(f <= e0 + 1e-12);
      CHECK(f >= e0 - t * 8 * std::log(2.0) - 1e-12);
    }
  }
}

TEST_CASE("contradiction pair: F(T) = 1 - T ln 2 rises to E0 = 1") {
  auto [e0, deg] = thermo::ground_energy(kContradiction);
  CHECK(e0 == 1);
  CHECK(deg == 2);
  double prev = -1e300;
  for (int j = 0; j <= 10; ++j) {
    double t = std::pow(2.0, -j);
    double f = thermo::free_energy(kContradiction, t);
    CHECK(f == doctest::Approx(1.0 - t * std::log(2.0)).epsilon(1e-12));
    CHECK(std::fabs(f - 1.0) <= t * std::log(2.0) + 1e-12);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("satisfiable instances keep |F| within the degeneracy bound") {
  auto inst = random_instance(10, 3, 10, 4);  // low density: satisfiable
  REQUIRE(thermo::ground_energy(inst).first == 0);
  for (double t : {0.5, 1.0, 2.0}) {
    CHECK(std::fabs(thermo::free_energy(inst, t)) <= t * 10 * std::log(2.0));
  }
}

TEST_CASE("thermal energy: infinite-T limit of one unit clause is 1/2") {
  KSatInstance inst(1, 1, {{Literal{0, 1}}});
  CHECK(std::fabs(thermo::thermal_average_energy(inst, 1e8) - 0.5) <= 1e-7);
}

TEST_CASE("thermal energy decreases with 1/T and approaches E0") {
  auto inst = random_instance(8, 3, 30, 12);
  int e0 = thermo::ground_energy(inst).first;
  double prev = 1e300;
  for (double t : {4.0, 1.0, 0.5, 0.25, 0.125}) {
    double h = thermo::thermal_average_energy(inst, t);
    CHECK(h <= prev + 1e-12);
    CHECK(h >= e0 - 1e-12);
    CHECK(h <= inst.m());
    prev = h;
    double bound = std::exp(-1.0 / t) * inst.m() * std::pow(2.0, inst.n());
    CHECK(std::fabs(h - e0) <= bound + 1e-12);
  }
}

TEST_CASE("<H> equals -d(log Z)/d(beta)") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(8, 2, 16, rng.next());
    auto spectrum = thermo::energy_spectrum(inst);
    double beta = 0.3 + 2.0 * rng.unit();
    const double h = 1e-4;
    double numeric = -(spectrum.log_partition_at_beta(beta + h) -
                       spectrum.log_partition_at_beta(beta - h)) /
                     (2.0 * h);
    CHECK(std::fabs(spectrum.thermal_energy_at_beta(beta) - numeric) <= 1e-6);
  }
}

TEST_CASE("ground energy agrees with the search-based optimum") {
  auto inst = random_instance(12, 3, 60, 3);
  int e0 = thermo::ground_energy(inst).first;
  CHECK(threshold::dpll_solve(inst).satisfiable == (e0 == 0));
  threshold::MaxSatOptions bnb;
  bnb.exhaustive_max_n = 0;  // force branch and bound
  CHECK(threshold::max_sat_optimum(inst, bnb) == e0);
}

TEST_CASE("disorder average of log_z on empty formulas is exact") {
  EnsembleParams p;
  p.n = 6;
  p.k = 2;
  p.m = 0;
  p.seed = 9;
  auto avg = thermo::disorder_average(thermo::Estimator::LogZ, p, 8);
  CHECK(avg.mean == doctest::Approx(6.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(avg.std_error == 0.0);
  CHECK(avg.samples == 8);
}

TEST_CASE("ground energy density: zero at low density, positive at high") {
  EnsembleParams p;
  p.n = 15;
  p.k = 3;
  p.alpha = 0.1;
  p.seed = 77;
  auto low = thermo::disorder_average(thermo::Estimator::GroundEnergyDensity, p, 200, 4);
  CHECK(low.mean == 0.0);  // every sample satisfiable

  p.alpha = 8.0;
  auto high = thermo::disorder_average(thermo::Estimator::GroundEnergyDensity, p, 50, 4);
  CHECK(high.mean > 0.0);
  CHECK(high.mean > 3.0 * high.std_error);
}

TEST_CASE("disorder average validates inputs") {
  EnsembleParams p;
  p.n = 5;
  p.k = 2;
  p.m = 5;
  CHECK_THROWS_AS(thermo::disorder_average(thermo::Estimator::LogZ, p, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(thermo::estimator_from_name("banana"), std::invalid_argument);
  CHECK(thermo::estimator_from_name("free_energy") == thermo::Estimator::FreeEnergy);
}

TEST_CASE("disorder average is independent of the worker count") {
  EnsembleParams p;
  p.n = 9;
  p.k = 3;
  p.alpha = 3.0;
  p.seed = 1234;
  p.temperature = 0.8;
  auto serial = thermo::disorder_average(thermo::Estimator::ThermalEnergy, p, 33, 1);
  auto parallel = thermo::disorder_average(thermo::Estimator::ThermalEnergy, p, 33, 4);
  CHECK(serial.mean == parallel.mean);
  CHECK(serial.std_error == parallel.std_error);
}

TEST_CASE("n = 0 edge: a single empty configuration with Z = 1") {
  KSatInstance inst(0, 0, {});
  CHECK(thermo::partition_function(inst, 1.0).log_z == 0.0);
  auto [e0, deg] = thermo::ground_energy(inst);
  CHECK(e0 == 0);
  CHECK(deg == 1);
}
