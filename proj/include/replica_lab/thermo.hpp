#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "replica_lab/ksat.hpp"

namespace replica_lab::thermo {

// Exhaustive enumeration guard: 2^n states. Callers may raise it explicitly;
// exceeding it is a capacity error, never a silent truncation.
inline constexpr int kDefaultMaxExhaustiveN = 24;

// Density of states: counts[e] = number of assignments with exactly e
// violated clauses. Everything thermal at any temperature follows from it.
struct EnergySpectrum {
  int n = 0;
  int m = 0;
  std::vector<std::uint64_t> counts;  // size m + 1
  int ground_energy = 0;
  std::uint64_t ground_degeneracy = 0;

  double log_partition_at_beta(double beta) const;
  double thermal_energy_at_beta(double beta) const;
};

EnergySpectrum energy_spectrum(const ksat::KSatInstance& inst,
                               int max_n = kDefaultMaxExhaustiveN);

// Per-configuration energies, indexed by spin bitmask (bit i set -> s_i=+1).
// Size 2^n.
std::vector<int> config_energies(const ksat::KSatInstance& inst,
                                 int max_n = kDefaultMaxExhaustiveN);

struct PartitionValue {
  double log_z;        // ln sum_s exp(-H(s)/T); at most n ln 2
  double temperature;
};

PartitionValue partition_function(const ksat::KSatInstance& inst, double temperature,
                                  int max_n = kDefaultMaxExhaustiveN);

// (minimum energy, number of minimizers); minimum 0 iff satisfiable.
std::pair<int, std::uint64_t> ground_energy(const ksat::KSatInstance& inst,
                                            int max_n = kDefaultMaxExhaustiveN);

// F(T) = -T ln Z; obeys E0 - T n ln 2 <= F <= E0 and tends to E0 as T -> 0.
double free_energy(const ksat::KSatInstance& inst, double temperature,
                   int max_n = kDefaultMaxExhaustiveN);

// <H> at temperature T; lies in [E0, m] and decreases as T drops.
double thermal_average_energy(const ksat::KSatInstance& inst, double temperature,
                              int max_n = kDefaultMaxExhaustiveN);

enum class Estimator { LogZ, FreeEnergy, ThermalEnergy, GroundEnergyDensity };
Estimator estimator_from_name(std::string_view name);
const char* estimator_name(Estimator est);

struct DisorderAverage {
  double mean = 0.0;
  double std_error = 0.0;  // sample sdev / sqrt(samples); NaN when samples < 2
  int samples = 0;
};

// Mean +/- stderr of the estimator over `samples` instances drawn with
// per-sample derived seeds. Sample i is always seeded from (params.seed, i)
// and the reduction runs in sample order, so the result is independent of
// the worker count.
DisorderAverage disorder_average(Estimator estimator, const ksat::EnsembleParams& params,
                                 int samples, int workers = 1,
                                 int max_n = kDefaultMaxExhaustiveN);

}  // namespace replica_lab::thermo
