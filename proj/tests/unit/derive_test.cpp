#include <gtest/gtest.h>

#include "oracles.hpp"
#include "procverify/derive.hpp"

using namespace procverify;

namespace {

Term key(const char* n) { return Term::constant(n, Type::key()); }
Term msg(const char* n) { return Term::constant(n, Type::message()); }
Term agent(const char* n) { return Term::constant(n, Type::agent()); }

}  // namespace

TEST(Derive, Basics) {
  Term k = key("k"), m = msg("m"), a = agent("A");
  EXPECT_TRUE(adversary_can_derive({Term::encrypt(k, m), k}, m));
  EXPECT_FALSE(adversary_can_derive({Term::encrypt(k, m)}, m));
  EXPECT_TRUE(adversary_can_derive({Term::encrypt(k, m)}, Term::hash(Term::encrypt(k, m))));
  EXPECT_TRUE(adversary_can_derive({Term::tuple({m, k})}, Term::encrypt(k, m)));
  EXPECT_FALSE(adversary_can_derive({a}, Term::private_key(a)));
  EXPECT_TRUE(adversary_can_derive({a}, Term::public_key(a)));
  EXPECT_TRUE(adversary_can_derive({Term::encrypt(Term::public_key(a), m), Term::private_key(a)}, m));
  EXPECT_FALSE(adversary_can_derive({Term::encrypt(Term::public_key(a), m), a}, m));
  EXPECT_FALSE(adversary_can_derive({m, a}, Term::signature(m, a)));
  EXPECT_TRUE(adversary_can_derive({m, Term::private_key(a)}, Term::signature(m, a)));
}

TEST(Derive, KeysUnlockedLater) {
  Term k1 = key("k1"), k2 = key("k2"), m = msg("m");
  // k1(k2) arrives before k1 is known; adding k1 must reopen it
  Knowledge kn({Term::encrypt(k2, m), Term::encrypt(k1, k2)});
  EXPECT_FALSE(kn.derivable(m));
  kn.add(k1);
  EXPECT_TRUE(kn.derivable(m));
  EXPECT_TRUE(kn.analyzed().contains(k2));
}

TEST(Derive, GoalsAreNormalized) {
  Term k = key("k"), m = msg("m");
  EXPECT_TRUE(adversary_can_derive({m}, Term::decrypt(k, Term::encrypt(k, m))));
  EXPECT_TRUE(adversary_can_derive({m, k}, Term::proj(2, 1, Term::tuple({m, k}))));
}

TEST(Derive, AgreesWithBruteForceClosure) {
  std::mt19937_64 rng(7);
  std::size_t yes = 0, no = 0;
  for (int i = 0; i < 2000; ++i) {
    auto inst = oracle::random_dy_instance(rng);
    bool expected = oracle::brute_force_derivable(inst.knowledge, inst.goal);
    bool got = adversary_can_derive(inst.knowledge, inst.goal);
    ASSERT_EQ(got, expected) << "goal " << inst.goal << " instance " << i;
    (expected ? yes : no)++;
  }
  EXPECT_GT(yes, 300u);
  EXPECT_GT(no, 300u);
}

TEST(Derive, Monotone) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    auto a = oracle::random_dy_instance(rng);
    auto b = oracle::random_dy_instance(rng);
    if (!adversary_can_derive(a.knowledge, a.goal)) continue;
    TermSet more = a.knowledge;
    more.insert(b.knowledge.begin(), b.knowledge.end());
    EXPECT_TRUE(adversary_can_derive(more, a.goal));
  }
}
