#include "replica_lab/groups.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "replica_lab/errors.hpp"

namespace replica_lab::groups {

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
  std::vector<bool> seen(images_.size(), false);
  for (int img : images_) {
    if (img < 0 || img >= static_cast<int>(images_.size()) || seen[img]) {
      throw std::invalid_argument("Permutation: images are not a bijection");
    }
    seen[img] = true;
  }
}

Permutation Permutation::identity(int size) {
  std::vector<int> images(size);
  std::iota(images.begin(), images.end(), 0);
  return Permutation(std::move(images));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (size() != other.size()) {
    throw std::invalid_argument("Permutation::compose: size mismatch");
  }
  std::vector<int> images(size());
  for (int i = 0; i < size(); ++i) images[i] = images_[other.images_[i]];
  return Permutation(std::move(images));
}

Permutation Permutation::inverse() const {
  std::vector<int> images(size());
  for (int i = 0; i < size(); ++i) images[images_[i]] = i;
  return Permutation(std::move(images));
}

mpz_class perm_count(int set_size, CountConvention convention) {
  if (set_size < 0) throw std::invalid_argument("perm_count: set_size must be >= 0");
  if (set_size == 0 && convention == CountConvention::Paper) return 0;
  mpz_class out;
  mpz_fac_ui(out.get_mpz_t(), static_cast<unsigned long>(set_size));
  return out;
}

std::vector<Permutation> enumerate_permutations(int set_size) {
  if (set_size < 0) throw std::invalid_argument("enumerate_permutations: negative size");
  if (set_size > 8) {
    throw CapacityError("enumerate_permutations: " + std::to_string(set_size) +
                        "! permutations exceed the n <= 8 guard");
  }
  std::vector<int> images(set_size);
  std::iota(images.begin(), images.end(), 0);
  std::vector<Permutation> out;
  do {
    out.push_back(Permutation(images));
  } while (std::next_permutation(images.begin(), images.end()));
  return out;
}

GroupTable GroupTable::from_table(std::vector<std::vector<int>> table) {
  const int order = static_cast<int>(table.size());
  if (order == 0) throw std::invalid_argument("GroupTable: empty table");
  for (const auto& row : table) {
    if (static_cast<int>(row.size()) != order) {
      throw std::invalid_argument("GroupTable: table is not square");
    }
    for (int entry : row) {
      if (entry < 0 || entry >= order) {
        throw std::invalid_argument("GroupTable: entry out of range (closure failure)");
      }
    }
  }
  GroupTable g;
  g.table = std::move(table);

  for (int e = 0; e < order; ++e) {
    bool is_identity = true;
    for (int x = 0; x < order && is_identity; ++x) {
      is_identity = g.table[e][x] == x && g.table[x][e] == x;
    }
    if (is_identity) {
      g.identity = e;
      break;
    }
  }
  if (g.identity < 0) throw std::invalid_argument("GroupTable: no identity element");

  for (int a = 0; a < order; ++a) {
    bool has_inverse = false;
    for (int b = 0; b < order && !has_inverse; ++b) {
      has_inverse = g.table[a][b] == g.identity && g.table[b][a] == g.identity;
    }
    if (!has_inverse) {
      throw std::invalid_argument("GroupTable: element " + std::to_string(a) +
                                  " has no inverse");
    }
  }

  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      for (int c = 0; c < order; ++c) {
        if (g.table[g.table[a][b]][c] != g.table[a][g.table[b][c]]) {
          throw std::invalid_argument(
              "GroupTable: associativity fails at triple (" + std::to_string(a) + ", " +
              std::to_string(b) + ", " + std::to_string(c) + ")");
        }
      }
    }
  }
  return g;
}

namespace {

GroupTable cyclic_table(int order) {
  std::vector<std::vector<int>> t(order, std::vector<int>(order));
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) t[a][b] = (a + b) % order;
  }
  return GroupTable::from_table(std::move(t));
}

GroupTable klein_table() {
  std::vector<std::vector<int>> t(4, std::vector<int>(4));
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) t[a][b] = a ^ b;
  }
  return GroupTable::from_table(std::move(t));
}

GroupTable table_from_permutations(std::vector<Permutation> elements) {
  std::sort(elements.begin(), elements.end());
  const int order = static_cast<int>(elements.size());
  std::map<Permutation, int> index;
  for (int i = 0; i < order; ++i) index[elements[i]] = i;
  std::vector<std::vector<int>> t(order, std::vector<int>(order));
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      auto it = index.find(elements[a].compose(elements[b]));
      if (it == index.end()) {
        throw std::invalid_argument("table_from_permutations: set not closed");
      }
      t[a][b] = it->second;
    }
  }
  return GroupTable::from_table(std::move(t));
}

std::vector<Permutation> closure_of(std::vector<Permutation> gens) {
  std::set<Permutation> elems(gens.begin(), gens.end());
  elems.insert(Permutation::identity(gens.front().size()));
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<Permutation> snapshot(elems.begin(), elems.end());
    for (const auto& a : snapshot) {
      for (const auto& b : snapshot) {
        if (elems.insert(a.compose(b)).second) grew = true;
      }
    }
  }
  return {elems.begin(), elems.end()};
}

GroupTable dihedral4_table() {
  // Symmetries of the square on corners 0..3: rotation and a reflection.
  Permutation rot({1, 2, 3, 0});
  Permutation refl({1, 0, 3, 2});
  auto elems = closure_of({rot, refl});
  if (elems.size() != 8) throw std::logic_error("dihedral4_table: expected 8 elements");
  return table_from_permutations(std::move(elems));
}

GroupTable quaternion_table() {
  // Elements 2u + s encode (-1)^s * unit, units e, i, j, k = 0..3.
  auto unit_mul = [](int a, int b) -> std::pair<int, int> {  // (unit, sign)
    if (a == 0) return {b, 0};
    if (b == 0) return {a, 0};
    if (a == b) return {0, 1};                       // i*i = j*j = k*k = -1
    static const int third[4][4] = {{0, 0, 0, 0},    // unused row/col 0
                                    {0, 0, 3, 2},
                                    {0, 3, 0, 1},
                                    {0, 2, 1, 0}};
    static const int parity[4][4] = {{0, 0, 0, 0},
                                     {0, 0, 0, 1},   // i*j = k, i*k = -j
                                     {0, 1, 0, 0},   // j*i = -k, j*k = i
                                     {0, 0, 1, 0}};  // k*i = j, k*j = -i
    return {third[a][b], parity[a][b]};
  };
  std::vector<std::vector<int>> t(8, std::vector<int>(8));
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) {
      auto [unit, flip] = unit_mul(x >> 1, y >> 1);
      int sign = ((x & 1) ^ (y & 1) ^ flip) & 1;
      t[x][y] = (unit << 1) | sign;
    }
  }
  return GroupTable::from_table(std::move(t));
}

}  // namespace

GroupTable named_group_table(const std::string& name) {
  if (name.size() == 2 && name[0] == 'c' && name[1] >= '2' && name[1] <= '8') {
    return cyclic_table(name[1] - '0');
  }
  if (name == "klein4") return klein_table();
  if (name == "s3") return table_from_permutations(enumerate_permutations(3));
  if (name == "d4") return dihedral4_table();
  if (name == "q8") return quaternion_table();
  throw std::invalid_argument("unknown group '" + name + "' (see named_group_list)");
}

std::vector<std::string> named_group_list() {
  return {"c2", "c3", "c4", "c5", "c6", "c7", "c8", "klein4", "s3", "d4", "q8"};
}

std::vector<Permutation> cayley_embed(const GroupTable& group) {
  const int order = group.order();
  if (order > 12) {
    throw CapacityError("cayley_embed: exhaustive verification is limited to order <= 12");
  }
  std::vector<Permutation> lambda;
  lambda.reserve(order);
  for (int a = 0; a < order; ++a) {
    lambda.push_back(Permutation(group.table[a]));  // throws if row is not a bijection
  }
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      if (!(lambda[group.table[a][b]] == lambda[a].compose(lambda[b]))) {
        throw std::logic_error("cayley_embed: translation map is not a homomorphism");
      }
      if (a != b && lambda[a] == lambda[b]) {
        throw std::logic_error("cayley_embed: translation map is not injective");
      }
    }
  }
  return lambda;
}

namespace {

// Subgroups of a group of order <= 32, each encoded as an element bitmask.
// Breadth-first closure growth reaches every subgroup: any H is obtained
// from <e> by repeatedly adjoining one of its own elements.
std::set<std::uint32_t> all_subgroup_masks(const std::vector<std::vector<int>>& table,
                                           int identity) {
  const int order = static_cast<int>(table.size());
  auto close = [&](std::uint32_t mask) {
    bool grew = true;
    while (grew) {
      grew = false;
      for (int a = 0; a < order; ++a) {
        if (!(mask >> a & 1)) continue;
        for (int b = 0; b < order; ++b) {
          if (!(mask >> b & 1)) continue;
          int ab = table[a][b];
          if (!(mask >> ab & 1)) {
            mask |= std::uint32_t{1} << ab;
            grew = true;
          }
        }
      }
    }
    return mask;
  };

  std::set<std::uint32_t> subgroups;
  std::vector<std::uint32_t> frontier;
  std::uint32_t trivial = std::uint32_t{1} << identity;
  subgroups.insert(trivial);
  frontier.push_back(trivial);
  while (!frontier.empty()) {
    std::uint32_t h = frontier.back();
    frontier.pop_back();
    for (int g = 0; g < order; ++g) {
      if (h >> g & 1) continue;
      std::uint32_t grown = close(h | (std::uint32_t{1} << g));
      if (subgroups.insert(grown).second) frontier.push_back(grown);
    }
  }
  return subgroups;
}

}  // namespace

std::vector<std::size_t> subgroup_orders_of_symmetric(int n) {
  if (n < 0) throw std::invalid_argument("subgroup_orders_of_symmetric: negative n");
  if (n > 4) {
    throw CapacityError("subgroup_orders_of_symmetric: subgroup enumeration is limited to n <= 4");
  }
  auto elements = enumerate_permutations(n);
  const int order = static_cast<int>(elements.size());
  std::map<Permutation, int> index;
  for (int i = 0; i < order; ++i) index[elements[i]] = i;
  std::vector<std::vector<int>> table(order, std::vector<int>(order));
  int identity = index[Permutation::identity(n)];
  for (int a = 0; a < order; ++a) {
    for (int b = 0; b < order; ++b) {
      table[a][b] = index[elements[a].compose(elements[b])];
    }
  }
  std::set<std::size_t> orders;
  for (std::uint32_t mask : all_subgroup_masks(table, identity)) {
    orders.insert(static_cast<std::size_t>(__builtin_popcount(mask)));
  }
  return {orders.begin(), orders.end()};
}

bool no_finite_self_embedding(int n) {
  auto orders = subgroup_orders_of_symmetric(n);
  std::size_t full = orders.empty() ? 0 : orders.back();
  mpz_class fact;
  mpz_fac_ui(fact.get_mpz_t(), static_cast<unsigned long>(n));
  if (mpz_class(static_cast<unsigned long>(full)) != fact) {
    throw std::logic_error("no_finite_self_embedding: S_n itself missing from enumeration");
  }
  // Every proper subgroup must be strictly smaller than n!, so none can be
  // isomorphic to S_n; a set violating this would have to be infinite.
  std::size_t count_full = 0;
  for (std::size_t o : orders) {
    if (o == full) ++count_full;
    if (o > full) return false;
  }
  return count_full == 1;
}

bool BlockGroupDescriptor::contains(const Permutation& p) const {
  if (p.size() != n) return false;
  for (int i = 0; i < static_cast<int>(n); ++i) {
    if (p(i) / m != i / m) return false;
  }
  return true;
}

BlockGroupDescriptor block_group(std::int64_t n, std::int64_t m) {
  if (n < 1 || m < 1) throw std::invalid_argument("block_group: need n, m >= 1");
  if (m > n) throw std::invalid_argument("block_group: need m <= n");
  if (n % m != 0) {
    throw std::invalid_argument("block_group: m = " + std::to_string(m) +
                                " does not divide n = " + std::to_string(n));
  }
  if (m > 1'000'000) throw CapacityError("block_group: factorial of m > 1e6 not computed");
  BlockGroupDescriptor g;
  g.n = n;
  g.m = m;
  mpz_class fact;
  mpz_fac_ui(fact.get_mpz_t(), static_cast<unsigned long>(m));
  mpz_pow_ui(g.order.get_mpz_t(), fact.get_mpz_t(), static_cast<unsigned long>(n / m));
  return g;
}

std::vector<Permutation> block_group_members(int n, int m) {
  if (n > 8) throw CapacityError("block_group_members: explicit generation limited to n <= 8");
  BlockGroupDescriptor desc = block_group(n, m);
  auto block_perms = enumerate_permutations(m);
  const int blocks = n / m;
  std::vector<std::size_t> digit(blocks, 0);
  std::vector<Permutation> members;
  while (true) {
    std::vector<int> images(n);
    for (int b = 0; b < blocks; ++b) {
      const Permutation& p = block_perms[digit[b]];
      for (int i = 0; i < m; ++i) images[b * m + i] = b * m + p(i);
    }
    members.push_back(Permutation(std::move(images)));
    int pos = 0;
    while (pos < blocks && ++digit[pos] == block_perms.size()) digit[pos++] = 0;
    if (pos == blocks) break;
  }
  if (mpz_class(members.size()) != desc.order) {
    throw std::logic_error("block_group_members: generated count disagrees with (m!)^(n/m)");
  }
  return members;
}

Permutation block_swap_permutation(int n, int m) {
  BlockGroupDescriptor desc = block_group(n, m);
  if (m == n) {
    throw std::invalid_argument("block_swap_permutation: m = n leaves no second block");
  }
  std::vector<int> images(n);
  std::iota(images.begin(), images.end(), 0);
  for (int i = 0; i < m; ++i) {
    images[i] = i + m;
    images[i + m] = i;
  }
  (void)desc;
  return Permutation(std::move(images));
}

ChainValidity chain_valid(const BreakingChain& chain) {
  auto fail = [](int index, std::string reason) {
    return ChainValidity{false, index, std::move(reason)};
  };
  if (chain.n < 1) return fail(-1, "n must be >= 1");
  mpz_class prev = chain.n;
  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    const mpz_class& b = chain.blocks[i];
    if (b < 1) return fail(static_cast<int>(i), "block size must be >= 1");
    if (b >= prev) {
      return fail(static_cast<int>(i), "block size must strictly decrease (" + b.get_str() +
                                           " !< " + prev.get_str() + ")");
    }
    if (prev % b != 0) {
      return fail(static_cast<int>(i),
                  b.get_str() + " does not divide " + prev.get_str());
    }
    prev = b;
  }
  return ChainValidity{};
}

bool subgroup_chain_check(const BreakingChain& chain) {
  if (!chain_valid(chain).valid) return false;
  if (chain.n > 8) throw CapacityError("subgroup_chain_check: element-wise check limited to n <= 8");
  int n = static_cast<int>(chain.n.get_ui());
  mpz_class prev = chain.n;
  for (const mpz_class& b : chain.blocks) {
    int m_outer = static_cast<int>(prev.get_ui());
    int m_inner = static_cast<int>(b.get_ui());
    if (m_outer < n) {
      BlockGroupDescriptor outer = block_group(n, m_outer);
      for (const Permutation& p : block_group_members(n, m_inner)) {
        if (!outer.contains(p)) return false;
      }
    }
    prev = b;
  }
  return true;
}

std::vector<mpz_class> chain_group_orders(const BreakingChain& chain) {
  ChainValidity v = chain_valid(chain);
  if (!v.valid) throw std::invalid_argument("chain_group_orders: invalid chain: " + v.reason);
  if (!chain.n.fits_ulong_p() || chain.n.get_ui() > 1'000'000) {
    throw CapacityError("chain_group_orders: n too large for factorial orders");
  }
  unsigned long n = chain.n.get_ui();
  std::vector<mpz_class> orders;
  orders.reserve(chain.blocks.size());
  for (const mpz_class& b : chain.blocks) {
    unsigned long m = b.get_ui();
    mpz_class fact;
    mpz_fac_ui(fact.get_mpz_t(), m);
    mpz_class order;
    mpz_pow_ui(order.get_mpz_t(), fact.get_mpz_t(), n / m);
    orders.push_back(order);
  }
  return orders;
}

namespace {

void extend_chains(std::uint64_t n, std::uint64_t last, std::vector<mpz_class>& prefix,
                   std::vector<BreakingChain>& out, std::size_t max_chains) {
  for (std::uint64_t d = last - 1; d >= 1; --d) {
    if (last % d != 0) continue;
    if (out.size() >= max_chains) {
      throw CapacityError("enumerate_chains: more than " + std::to_string(max_chains) +
                          " chains");
    }
    prefix.emplace_back(d);
    out.push_back(BreakingChain{mpz_class(static_cast<unsigned long>(n)), prefix});
    extend_chains(n, d, prefix, out, max_chains);
    prefix.pop_back();
    if (d == 1) break;
  }
}

}  // namespace

std::vector<BreakingChain> enumerate_chains(std::uint64_t n, std::size_t max_chains) {
  if (n == 0) throw std::invalid_argument("enumerate_chains: n must be >= 1");
  std::vector<BreakingChain> out;
  std::vector<mpz_class> prefix;
  extend_chains(n, n, prefix, out, max_chains);
  return out;
}

int k_max(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("k_max: n must be >= 1");
  int omega = 0;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      n /= p;
      ++omega;
    }
  }
  if (n > 1) ++omega;
  return omega;
}

std::pair<mpz_class, BreakingChain> witness_n_for_k(int k) {
  if (k < 0) throw std::invalid_argument("witness_n_for_k: k must be >= 0");
  mpz_class n = 1;
  n <<= (k + 1);
  BreakingChain chain;
  chain.n = n;
  chain.blocks.reserve(k + 1);
  for (int i = k; i >= 0; --i) {
    mpz_class b = 1;
    b <<= i;
    chain.blocks.push_back(b);
  }
  ChainValidity v = chain_valid(chain);
  if (!v.valid) throw std::logic_error("witness_n_for_k: constructed chain invalid");
  return {n, chain};
}

}  // namespace replica_lab::groups
