#include "replica_lab/thermo.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "replica_lab/errors.hpp"
#include "replica_lab/numeric.hpp"
#include "replica_lab/rng.hpp"

namespace replica_lab::thermo {

namespace {

struct Occurrence {
  int clause;
  int sign;
};

void check_capacity(int n, int max_n) {
  if (max_n > 62) throw std::invalid_argument("exhaustive enumeration: max_n too large");
  if (n > max_n) {
    throw CapacityError("exhaustive enumeration needs 2^" + std::to_string(n) +
                        " states (limit 2^" + std::to_string(max_n) + ")");
  }
}

// Visits all 2^n assignments in binary-reflected Gray order, maintaining the
// energy incrementally: each step flips one spin and touches only the
// clauses containing it. visit(mask, energy) gets the spin bitmask
// (bit i set -> s_i = +1).
template <class Visit>
void enumerate_energies(const ksat::KSatInstance& inst, Visit&& visit) {
  const int n = inst.n();
  const int k = inst.k();
  const auto& clauses = inst.clauses();

  std::vector<std::vector<Occurrence>> occ(n);
  std::vector<int> false_count(clauses.size(), 0);
  int energy = 0;
  for (std::size_t j = 0; j < clauses.size(); ++j) {
    for (const auto& lit : clauses[j]) {
      occ[lit.var].push_back(Occurrence{static_cast<int>(j), lit.sign});
      if (lit.sign > 0) ++false_count[j];  // all spins start at -1 (x = 0)
    }
    if (false_count[j] == k) ++energy;
  }

  std::vector<std::int8_t> spins(n, -1);
  std::uint64_t mask = 0;
  visit(mask, energy);
  const std::uint64_t total = n >= 64 ? 0 : (std::uint64_t{1} << n);
  for (std::uint64_t step = 1; step < total; ++step) {
    int v = std::countr_zero(step);
    int old_spin = spins[v];
    spins[v] = static_cast<std::int8_t>(-old_spin);
    mask ^= std::uint64_t{1} << v;
    for (const Occurrence& o : occ[v]) {
      bool was_true = o.sign * old_spin > 0;
      if (was_true) {
        if (++false_count[o.clause] == k) ++energy;
      } else {
        if (false_count[o.clause]-- == k) --energy;
      }
    }
    visit(mask, energy);
  }
}

}  // namespace

double EnergySpectrum::log_partition_at_beta(double beta) const {
  LogSumAccumulator acc;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    if (counts[e] == 0) continue;
    acc.add(std::log(static_cast<double>(counts[e])) - beta * static_cast<double>(e));
  }
  return acc.value();
}

double EnergySpectrum::thermal_energy_at_beta(double beta) const {
  double log_z = log_partition_at_beta(beta);
  double mean = 0.0;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    if (counts[e] == 0) continue;
    double w = std::exp(std::log(static_cast<double>(counts[e])) -
                        beta * static_cast<double>(e) - log_z);
    mean += static_cast<double>(e) * w;
  }
  return mean;
}

EnergySpectrum energy_spectrum(const ksat::KSatInstance& inst, int max_n) {
  check_capacity(inst.n(), max_n);
  EnergySpectrum spec;
  spec.n = inst.n();
  spec.m = inst.m();
  spec.counts.assign(static_cast<std::size_t>(inst.m()) + 1, 0);
  enumerate_energies(inst, [&](std::uint64_t, int e) { ++spec.counts[e]; });
  spec.ground_energy = 0;
  while (spec.counts[spec.ground_energy] == 0) ++spec.ground_energy;
  spec.ground_degeneracy = spec.counts[spec.ground_energy];
  return spec;
}

std::vector<int> config_energies(const ksat::KSatInstance& inst, int max_n) {
  check_capacity(inst.n(), max_n);
  std::vector<int> energies(std::size_t{1} << inst.n());
  enumerate_energies(inst, [&](std::uint64_t mask, int e) { energies[mask] = e; });
  return energies;
}

PartitionValue partition_function(const ksat::KSatInstance& inst, double temperature,
                                  int max_n) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("partition_function: temperature must be > 0");
  }
  EnergySpectrum spec = energy_spectrum(inst, max_n);
  return PartitionValue{spec.log_partition_at_beta(1.0 / temperature), temperature};
}

std::pair<int, std::uint64_t> ground_energy(const ksat::KSatInstance& inst, int max_n) {
  EnergySpectrum spec = energy_spectrum(inst, max_n);
  return {spec.ground_energy, spec.ground_degeneracy};
}

double free_energy(const ksat::KSatInstance& inst, double temperature, int max_n) {
  return -temperature * partition_function(inst, temperature, max_n).log_z;
}

double thermal_average_energy(const ksat::KSatInstance& inst, double temperature,
                              int max_n) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("thermal_average_energy: temperature must be > 0");
  }
  EnergySpectrum spec = energy_spectrum(inst, max_n);
  return spec.thermal_energy_at_beta(1.0 / temperature);
}

Estimator estimator_from_name(std::string_view name) {
  if (name == "log_z") return Estimator::LogZ;
  if (name == "free_energy") return Estimator::FreeEnergy;
  if (name == "thermal_energy") return Estimator::ThermalEnergy;
  if (name == "ground_energy_density") return Estimator::GroundEnergyDensity;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

const char* estimator_name(Estimator est) {
  switch (est) {
    case Estimator::LogZ: return "log_z";
    case Estimator::FreeEnergy: return "free_energy";
    case Estimator::ThermalEnergy: return "thermal_energy";
    case Estimator::GroundEnergyDensity: return "ground_energy_density";
  }
  return "?";
}

DisorderAverage disorder_average(Estimator estimator, const ksat::EnsembleParams& params,
                                 int samples, int workers, int max_n) {
  if (samples <= 0) throw std::invalid_argument("disorder_average: samples must be >= 1");
  params.validate();
  if (estimator == Estimator::GroundEnergyDensity) {
    if (params.n == 0) {
      throw std::invalid_argument("disorder_average: ground energy density needs n >= 1");
    }
  } else if (!(params.temperature > 0.0)) {
    throw std::invalid_argument("disorder_average: temperature must be > 0");
  }

  std::vector<double> values(samples);
  parallel_for_indexed(samples, workers, [&](std::size_t i) {
    auto inst = ksat::generate_instance(
        params.with_seed(derive_stream_seed(params.seed, i)));
    EnergySpectrum spec = energy_spectrum(inst, max_n);
    switch (estimator) {
      case Estimator::LogZ:
        values[i] = spec.log_partition_at_beta(1.0 / params.temperature);
        break;
      case Estimator::FreeEnergy:
        values[i] = -params.temperature * spec.log_partition_at_beta(1.0 / params.temperature);
        break;
      case Estimator::ThermalEnergy:
        values[i] = spec.thermal_energy_at_beta(1.0 / params.temperature);
        break;
      case Estimator::GroundEnergyDensity:
        values[i] = static_cast<double>(spec.ground_energy) / params.n;
        break;
    }
  });

  DisorderAverage out;
  out.samples = samples;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / samples;
  if (samples >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / (samples - 1)) / std::sqrt(static_cast<double>(samples));
  } else {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace replica_lab::thermo
