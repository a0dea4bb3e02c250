#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace replica_lab::groups {

// A bijection of {0, ..., size-1}; the size-0 permutation (empty map) is
// valid and unique.
class Permutation {
public:
  Permutation() = default;
  explicit Permutation(std::vector<int> images);
  static Permutation identity(int size);

  int size() const { return static_cast<int>(images_.size()); }
  int operator()(int i) const { return images_[i]; }
  const std::vector<int>& images() const { return images_; }

  // (p.compose(q))(x) = p(q(x)): apply q first.
  Permutation compose(const Permutation& other) const;
  Permutation inverse() const;

  bool operator==(const Permutation&) const = default;
  bool operator<(const Permutation& o) const { return images_ < o.images_; }

private:
  std::vector<int> images_;
};

enum class CountConvention {
  Standard,  // |Perm(X)| = n! with 0! = 1: the empty map is a bijection of the empty set
  Paper,     // n! for n >= 1 but 0 for n = 0
};

mpz_class perm_count(int set_size, CountConvention convention = CountConvention::Standard);

// All set_size! permutations in lexicographic image order; set_size <= 8.
std::vector<Permutation> enumerate_permutations(int set_size);

// Finite group given by its composition table: table[a][b] = a*b over
// element indices. Validation checks closure, identity, inverses and (for
// the orders handled here) full associativity, reporting the failing triple.
struct GroupTable {
  std::vector<std::vector<int>> table;
  int identity = -1;

  int order() const { return static_cast<int>(table.size()); }
  static GroupTable from_table(std::vector<std::vector<int>> table);
};

// Built-in tables: c2..c8 (cyclic), klein4, s3, d4, q8.
GroupTable named_group_table(const std::string& name);
std::vector<std::string> named_group_list();

// Left-translation embedding a -> (x -> a*x) into the permutations of the
// element set; verifies it is an injective homomorphism before returning.
// Order <= 12.
std::vector<Permutation> cayley_embed(const GroupTable& group);

// Sorted distinct orders of all subgroups of S_n (n <= 4).
std::vector<std::size_t> subgroup_orders_of_symmetric(int n);

// Checks that no proper subgroup of S_n has order n!: a finite symmetric
// group is never isomorphic to a proper subgroup of itself. n <= 4.
bool no_finite_self_embedding(int n);

// Block group (S_m)^{n/m}: permutations preserving each contiguous block
// {im, ..., (i+1)m - 1}. Order (m!)^{n/m}, exact.
struct BlockGroupDescriptor {
  std::int64_t n = 0;
  std::int64_t m = 0;
  mpz_class order;

  bool contains(const Permutation& p) const;
};

BlockGroupDescriptor block_group(std::int64_t n, std::int64_t m);

// All (m!)^{n/m} members, n <= 8.
std::vector<Permutation> block_group_members(int n, int m);

// The permutation swapping block 0 and block 1 wholesale: a member of S_n
// that block_group(n, m) excludes (requires m < n).
Permutation block_swap_permutation(int n, int m);

// Nested breaking chain: block sizes m_1 > m_2 > ... >= 1 with m_1 | n,
// m_1 < n and m_{i+1} | m_i. Big integers so constructed witnesses of any
// depth stay exact.
struct BreakingChain {
  mpz_class n;
  std::vector<mpz_class> blocks;

  std::size_t breakings() const { return blocks.size(); }
};

struct ChainValidity {
  bool valid = true;
  int failing_index = -1;  // index into blocks, -1 when valid
  std::string reason;
};

ChainValidity chain_valid(const BreakingChain& chain);

// Element-by-element verification of G_{n;m_{i+1}} inside G_{n;m_i} along
// the chain; n <= 8.
bool subgroup_chain_check(const BreakingChain& chain);

// |G_{n;m_i}| = (m_i!)^{n/m_i} for each chain step, exact.
std::vector<mpz_class> chain_group_orders(const BreakingChain& chain);

// All valid nonempty chains for n (the empty chain is always valid and not
// listed). Guarded by `max_chains`.
std::vector<BreakingChain> enumerate_chains(std::uint64_t n,
                                            std::size_t max_chains = 2'000'000);

// Maximum number of consecutive breakings: Omega(n), the number of prime
// factors of n counted with multiplicity (each step removes at least one
// factor, and peeling one prime at a time attains the bound).
int k_max(std::uint64_t n);

// Witness that any depth is reachable: n = 2^{k+1} with chain
// (2^k, ..., 2, 1) of length k+1.
std::pair<mpz_class, BreakingChain> witness_n_for_k(int k);

}  // namespace replica_lab::groups
