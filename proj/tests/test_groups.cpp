#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "replica_lab/errors.hpp"
#include "replica_lab/groups.hpp"

using namespace replica_lab;
using groups::BreakingChain;
using groups::Permutation;

namespace {

// Counts bijections {0..s-1} -> {0..s-1} by enumerating all s^s functions;
// the empty function (s = 0) is the unique bijection of the empty set.
std::uint64_t bijection_count_by_enumeration(int s) {
  if (s == 0) return 1;
  std::vector<int> f(s, 0);
  std::uint64_t count = 0;
  while (true) {
    std::vector<bool> hit(s, false);
    bool bijective = true;
    for (int v : f) {
      if (hit[v]) {
        bijective = false;
        break;
      }
      hit[v] = true;
    }
    if (bijective) ++count;
    int pos = 0;
    while (pos < s && ++f[pos] == s) f[pos++] = 0;
    if (pos == s) break;
  }
  return count;
}

BreakingChain make_chain(unsigned long n, std::vector<unsigned long> blocks) {
  BreakingChain chain;
  chain.n = n;
  for (unsigned long b : blocks) chain.blocks.emplace_back(b);
  return chain;
}

}  // namespace

TEST_CASE("permutation counts under both conventions") {
  CHECK(groups::perm_count(3) == 6);
  CHECK(groups::perm_count(8) == 40320);
  CHECK(groups::perm_count(0) == 1);
  CHECK(groups::perm_count(0, groups::CountConvention::Paper) == 0);
  CHECK(groups::perm_count(3, groups::CountConvention::Paper) == 6);
  // the enumeration oracle backs the standard convention, including n = 0
  for (int s = 0; s <= 5; ++s) {
    CHECK(groups::perm_count(s) == bijection_count_by_enumeration(s));
  }
}

TEST_CASE("enumerate_permutations: lexicographic, complete, closed") {
  auto none = groups::enumerate_permutations(0);
  REQUIRE(none.size() == 1);
  CHECK(none[0].size() == 0);

  auto two = groups::enumerate_permutations(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == Permutation::identity(2));
  CHECK(two[1] == Permutation({1, 0}));

  auto four = groups::enumerate_permutations(4);
  CHECK(four.size() == 24);
  CHECK(std::is_sorted(four.begin(), four.end()));
  std::set<Permutation> all(four.begin(), four.end());
  for (const auto& a : four) {
    for (const auto& b : four) {
      CHECK(all.count(a.compose(b)) == 1);
    }
  }
  for (int s = 0; s <= 8; ++s) {
    CHECK(groups::perm_count(s) == groups::enumerate_permutations(s).size());
  }
  CHECK_THROWS_AS(groups::enumerate_permutations(9), CapacityError);
}

TEST_CASE("composition convention and inverse") {
  Permutation p({1, 2, 0});
  Permutation q({0, 2, 1});
  CHECK(p.compose(q) == Permutation({1, 0, 2}));  // p(q(x))
  CHECK(p.compose(p.inverse()) == Permutation::identity(3));
  CHECK_THROWS_AS(Permutation({0, 0, 1}), std::invalid_argument);
}

TEST_CASE("cayley embedding of the order-2 cyclic group") {
  auto c2 = groups::named_group_table("c2");
  auto embedded = groups::cayley_embed(c2);
  REQUIRE(embedded.size() == 2);
  CHECK(embedded[0] == Permutation::identity(2));
  CHECK(embedded[1] == Permutation({1, 0}));
}

TEST_CASE("cayley embedding: cyclic 3 and the Klein four-group") {
  auto c3 = groups::cayley_embed(groups::named_group_table("c3"));
  REQUIRE(c3.size() == 3);
  CHECK(c3[1].compose(c3[1]) == c3[2]);
  CHECK(c3[1].compose(c3[2]) == c3[0]);

  auto klein = groups::cayley_embed(groups::named_group_table("klein4"));
  REQUIRE(klein.size() == 4);
  for (std::size_t a = 1; a < 4; ++a) {
    // each non-identity image is a fixed-point-free involution
    CHECK(klein[a].compose(klein[a]) == Permutation::identity(4));
    for (int x = 0; x < 4; ++x) CHECK(klein[a](x) != x);
    for (std::size_t b = 1; b < 4; ++b) {
      CHECK(klein[a].compose(klein[b]) == klein[b].compose(klein[a]));
    }
  }
}

TEST_CASE("every named group embeds with matching order") {
  for (const auto& name : groups::named_group_list()) {
    auto table = groups::named_group_table(name);
    auto embedded = groups::cayley_embed(table);
    CHECK(embedded.size() == static_cast<std::size_t>(table.order()));
    std::set<Permutation> image(embedded.begin(), embedded.end());
    CHECK(image.size() == embedded.size());  // injective
    for (const auto& a : embedded) {
      for (const auto& b : embedded) {
        CHECK(image.count(a.compose(b)) == 1);  // image is a subgroup
      }
    }
  }
}

TEST_CASE("invalid tables are rejected with the failing triple") {
  // closure failure
  CHECK_THROWS_AS(groups::GroupTable::from_table({{0, 1}, {1, 5}}), std::invalid_argument);
  // no identity
  CHECK_THROWS_AS(groups::GroupTable::from_table({{1, 1}, {1, 1}}), std::invalid_argument);
  // relabeled Z2 (identity at index 1) is fine
  CHECK_NOTHROW(groups::GroupTable::from_table({{1, 0}, {0, 1}}));
  // associativity failure: quasigroup with identity
  try {
    groups::GroupTable::from_table({{0, 1, 2}, {1, 0, 0}, {2, 0, 1}});
    FAIL("expected a validation error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("associativity") != std::string::npos);
  }
}

TEST_CASE("subgroup order spectra of small symmetric groups") {
  CHECK(groups::subgroup_orders_of_symmetric(2) == std::vector<std::size_t>{1, 2});
  CHECK(groups::subgroup_orders_of_symmetric(3) == std::vector<std::size_t>{1, 2, 3, 6});
  CHECK(groups::subgroup_orders_of_symmetric(4) ==
        std::vector<std::size_t>{1, 2, 3, 4, 6, 8, 12, 24});
}

TEST_CASE("no finite symmetric group embeds into a proper subgroup of itself") {
  for (int n = 0; n <= 4; ++n) CHECK(groups::no_finite_self_embedding(n));
  CHECK_THROWS_AS(groups::no_finite_self_embedding(5), CapacityError);
}

TEST_CASE("block group orders") {
  CHECK(groups::block_group(4, 2).order == 4);
  CHECK(groups::block_group(6, 6).order == 720);  // degenerate: all of S_6
  CHECK(groups::block_group(6, 2).order == 8);
  CHECK_THROWS_AS(groups::block_group(6, 4), std::invalid_argument);  // 4 does not divide 6

  // (m!)^(n/m) equals the explicitly generated member count for n <= 8
  for (int n = 1; n <= 8; ++n) {
    for (int m = 1; m <= n; ++m) {
      if (n % m != 0) continue;
      auto members = groups::block_group_members(n, m);
      CHECK(groups::block_group(n, m).order == mpz_class(members.size()));
    }
  }
}

TEST_CASE("block membership and the excluded block swap") {
  auto g42 = groups::block_group(4, 2);
  CHECK(g42.contains(Permutation({1, 0, 2, 3})));
  CHECK(!g42.contains(Permutation({2, 3, 0, 1})));

  auto swap42 = groups::block_swap_permutation(4, 2);
  CHECK(swap42 == Permutation({2, 3, 0, 1}));
  CHECK(!g42.contains(swap42));

  auto swap63 = groups::block_swap_permutation(6, 3);
  CHECK(swap63 == Permutation({3, 4, 5, 0, 1, 2}));
  CHECK(!groups::block_group(6, 3).contains(swap63));

  CHECK_THROWS_AS(groups::block_swap_permutation(4, 4), std::invalid_argument);

  // composing the swap with any member stays outside (it lies in a nontrivial coset)
  for (auto [n, m] : {std::pair{4, 2}, std::pair{6, 3}, std::pair{6, 2}, std::pair{8, 4}}) {
    auto desc = groups::block_group(n, m);
    auto swap = groups::block_swap_permutation(n, m);
    for (const auto& member : groups::block_group_members(n, m)) {
      CHECK(!desc.contains(swap.compose(member)));
      CHECK(!desc.contains(member.compose(swap)));
    }
  }
}

TEST_CASE("chain validity") {
  CHECK(groups::chain_valid(make_chain(12, {6, 3, 1})).valid);
  CHECK(groups::chain_valid(make_chain(12, {})).valid);  // the empty chain

  auto bad_divisor = groups::chain_valid(make_chain(12, {5}));
  CHECK(!bad_divisor.valid);
  CHECK(bad_divisor.failing_index == 0);

  auto bad_step = groups::chain_valid(make_chain(12, {6, 4}));
  CHECK(!bad_step.valid);
  CHECK(bad_step.failing_index == 1);

  CHECK(!groups::chain_valid(make_chain(12, {12})).valid);   // m1 = n is no breaking
  CHECK(!groups::chain_valid(make_chain(12, {6, 6})).valid); // stalls
}

TEST_CASE("subgroup inclusions along a chain, element by element") {
  CHECK(groups::subgroup_chain_check(make_chain(8, {4, 2, 1})));
  CHECK(groups::subgroup_chain_check(make_chain(6, {3, 1})));
  CHECK(!groups::subgroup_chain_check(make_chain(12, {5})));
  CHECK_THROWS_AS(groups::subgroup_chain_check(make_chain(12, {6, 3, 1})), CapacityError);
}

TEST_CASE("chain enumeration and k_max") {
  auto chains12 = groups::enumerate_chains(12);
  int longest = 0;
  for (const auto& c : chains12) longest = std::max(longest, static_cast<int>(c.breakings()));
  CHECK(longest == 3);
  CHECK(groups::k_max(12) == 3);

  bool found_631 = false;
  for (const auto& c : chains12) {
    if (c.blocks == std::vector<mpz_class>{6, 3, 1}) found_631 = true;
    CHECK(groups::chain_valid(c).valid);
  }
  CHECK(found_631);

  for (std::uint64_t p : {2, 3, 5, 7, 11, 97}) {
    CHECK(groups::k_max(p) == 1);
    auto chains = groups::enumerate_chains(p);
    REQUIRE(chains.size() == 1);  // only (1)
    CHECK(chains[0].blocks == std::vector<mpz_class>{1});
  }

  CHECK(groups::k_max(1) == 0);
  CHECK(groups::enumerate_chains(1).empty());
  CHECK_THROWS_AS(groups::k_max(0), std::invalid_argument);
  CHECK_THROWS_AS(groups::enumerate_chains(0), std::invalid_argument);
}

TEST_CASE("k_max equals the longest enumerated chain up to 120") {
  for (std::uint64_t n = 2; n <= 120; ++n) {
    auto chains = groups::enumerate_chains(n);
    int longest = 0;
    for (const auto& c : chains) longest = std::max(longest, static_cast<int>(c.breakings()));
    CHECK(longest == groups::k_max(n));
  }
}

TEST_CASE("group orders strictly decrease along every chain") {
  for (std::uint64_t n = 2; n <= 48; ++n) {
    mpz_class full = groups::perm_count(static_cast<int>(n) > 48 ? 0 : static_cast<int>(n));
    for (const auto& chain : groups::enumerate_chains(n)) {
      auto orders = groups::chain_group_orders(chain);
      mpz_class prev;
      mpz_fac_ui(prev.get_mpz_t(), n);  // |S_n| precedes the first breaking
      for (const auto& order : orders) {
        CHECK(order < prev);
        prev = order;
      }
    }
  }
}

TEST_CASE("witness construction for any breaking depth") {
  auto [n0, chain0] = groups::witness_n_for_k(0);
  CHECK(n0 == 2);
  CHECK(chain0.blocks == std::vector<mpz_class>{1});

  auto [n2, chain2] = groups::witness_n_for_k(2);
  CHECK(n2 == 8);
  CHECK(chain2.blocks == std::vector<mpz_class>{4, 2, 1});

  auto [n20, chain20] = groups::witness_n_for_k(20);
  CHECK(n20 == mpz_class(1) << 21);
  CHECK(chain20.breakings() == 21);
  CHECK(groups::chain_valid(chain20).valid);

  // far beyond machine integers
  auto [n80, chain80] = groups::witness_n_for_k(80);
  CHECK(n80 == mpz_class(1) << 81);
  CHECK(chain80.breakings() == 81);
  CHECK(groups::chain_valid(chain80).valid);
}
