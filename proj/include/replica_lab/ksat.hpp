#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replica_lab/rng.hpp"

namespace replica_lab::ksat {

struct Literal {
  int var;   // 0-based variable index
  int sign;  // +1 plain, -1 negated
  bool operator==(const Literal&) const = default;
};

using Clause = std::vector<Literal>;

// Spin assignment, entries in {-1, +1}; s_i = 2 x_i - 1 for booleans x_i.
using SpinConfig = std::vector<std::int8_t>;

SpinConfig spins_from_bools(const std::vector<bool>& x);
std::vector<bool> bools_from_spins(const SpinConfig& s);
// bit i of `bits` set  ->  s_i = +1
SpinConfig spins_from_bits(std::uint64_t bits, int n);

// A random k-SAT instance: m clauses over n variables, each clause k
// distinct variables with signs. Clauses are stored with literals sorted by
// variable index; duplicate clauses are allowed (i.i.d. sampling).
class KSatInstance {
public:
  KSatInstance(int n, int k, std::vector<Clause> clauses,
               std::optional<std::uint64_t> seed = std::nullopt);

  int n() const { return n_; }
  int k() const { return k_; }
  int m() const { return static_cast<int>(clauses_.size()); }
  const std::vector<Clause>& clauses() const { return clauses_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  // Structural equality; the seed is provenance metadata and not compared.
  bool operator==(const KSatInstance& o) const {
    return n_ == o.n_ && k_ == o.k_ && clauses_ == o.clauses_;
  }

private:
  int n_;
  int k_;
  std::vector<Clause> clauses_;
  std::optional<std::uint64_t> seed_;
};

struct EnsembleParams {
  int n = 0;
  int k = 0;
  int m = -1;           // clause count; -1 means "derive from alpha"
  double alpha = -1.0;  // clause density; < 0 means "derive from m"
  double temperature = 1.0;
  std::uint64_t seed = 0;

  int clause_count() const;      // m, or llround(alpha * n)
  double clause_density() const; // alpha, or m / n
  void validate() const;
  EnsembleParams with_seed(std::uint64_t s) const {
    EnsembleParams p = *this;
    p.seed = s;
    return p;
  }
};

// Draws `count` clauses, each i.i.d. uniform over the C(n,k)*2^k pairs
// (variable subset, sign pattern). Consumes exactly k+1 generator words per
// clause (k subset draws + 1 sign word), so the clause stream is a stable
// function of the seed and instances at different m share prefixes.
std::vector<Clause> generate_clauses(int n, int k, int count, SplitMix64& rng);

KSatInstance generate_instance(const EnsembleParams& params);

// Rows of the m x n clause matrix: entry (j, i) is +1/-1 when clause j
// contains x_i plain/negated, 0 (absent) otherwise. Exactly k stored
// entries per row.
struct SparseClauseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<std::pair<int, int>>> entries;  // (column, sign)
};

SparseClauseMatrix clause_matrix(const KSatInstance& inst);
KSatInstance instance_from_matrix(const SparseClauseMatrix& mat);

// Violated-clause count 2^-k * sum_j prod_{i: J_ji != 0} (1 - J_ji s_i).
// Each factor is 0 (satisfied literal) or 2, so a clause contributes 1
// exactly when all k of its literals are false; only the k stored entries
// are touched, the absent-variable factors being 1.
int energy(const KSatInstance& inst, std::span<const std::int8_t> spins);

// Independent recount straight from the boolean reading x = (s+1)/2: a
// clause is violated when no literal evaluates true.
int count_violated_direct(const KSatInstance& inst, std::span<const std::int8_t> spins);

// DIMACS CNF: "p cnf n m" header, one clause per line, signed 1-based
// literals, 0-terminated.
std::string export_dimacs(const KSatInstance& inst);
KSatInstance import_dimacs(const std::string& text);

// {"n":..,"k":..,"m":..,"seed":..,"clauses":[[lit,..],..]} with DIMACS
// literal encoding.
std::string export_json(const KSatInstance& inst);
KSatInstance import_json(const std::string& text);

}  // namespace replica_lab::ksat
