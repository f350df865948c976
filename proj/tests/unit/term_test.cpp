#include <gtest/gtest.h>

#include "oracles.hpp"
#include "procverify/errors.hpp"
#include "procverify/term.hpp"

using namespace procverify;

namespace {

Term key(const char* n) { return Term::constant(n, Type::key()); }
Term msg(const char* n) { return Term::constant(n, Type::message()); }
Term agent(const char* n) { return Term::constant(n, Type::agent()); }

std::optional<Symbol> lookup(std::string_view name) {
  if (name == "A" || name == "B") return Symbol{Symbol::Kind::Constant, Type::agent()};
  if (name == "k1" || name == "k2") return Symbol{Symbol::Kind::Constant, Type::key()};
  if (name == "m1" || name == "m2") return Symbol{Symbol::Kind::Constant, Type::message()};
  if (name == "x" || name == "y") return Symbol{Symbol::Kind::Variable, Type::message()};
  if (name == "k") return Symbol{Symbol::Kind::Variable, Type::key()};
  return std::nullopt;
}

}  // namespace

TEST(Term, HashConsing) {
  Term a = Term::tuple({msg("m"), key("k")});
  Term b = Term::tuple({msg("m"), key("k")});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.hash_value(), b.hash_value());
  EXPECT_FALSE(msg("m") == Term::variable("m", Type::message()));
  EXPECT_FALSE(msg("k") == key("k"));
}

TEST(Term, RewriteRules) {
  Term k = key("k"), m = msg("m"), a = agent("A");
  EXPECT_EQ(normalize(Term::decrypt(k, Term::encrypt(k, m))), m);
  EXPECT_EQ(normalize(Term::decrypt(Term::private_key(a), Term::encrypt(Term::public_key(a), m))), m);
  EXPECT_EQ(normalize(Term::proj(3, 2, Term::tuple({m, k, a}))), k);
  // public keys do not open themselves
  Term stuck = Term::decrypt(Term::public_key(a), Term::encrypt(Term::public_key(a), m));
  EXPECT_EQ(normalize(stuck), stuck);
  // innermost: the inner redex enables the outer one
  Term nested = Term::decrypt(Term::proj(2, 1, Term::tuple({k, m})), Term::encrypt(k, m));
  EXPECT_EQ(normalize(nested), m);
}

TEST(Term, TypeErrors) {
  EXPECT_THROW(Term::encrypt(agent("A"), msg("m")), TypeError);
  EXPECT_THROW(Term::public_key(key("k")), TypeError);
  EXPECT_THROW(Term::proj(2, 1, Term::tuple({msg("m"), msg("m"), msg("m")})), TypeError);
  EXPECT_THROW(Term::proj(2, 3, Term::tuple({msg("m"), msg("m")})), TypeError);
  EXPECT_THROW(Term::hash(Term::variable("P", Type::process())), TypeError);
  // every value type is a Message, and a Message may stand for any of them
  EXPECT_NO_THROW(Term::hash(key("k")));
  EXPECT_NO_THROW(Term::encrypt(msg("m"), msg("m")));
}

TEST(Term, NormalizeIsIdempotent) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    auto inst = oracle::random_dy_instance(rng);
    Term n = normalize(inst.goal);
    EXPECT_EQ(normalize(n), n);
  }
}

TEST(Term, PrintParseRoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto inst = oracle::random_dy_instance(rng);
    for (const auto& t : inst.knowledge) {
      Term back = normalize(parse_term(t.str(), lookup));
      ASSERT_EQ(back, t) << t.str();
    }
  }
  Term x = Term::variable("x", Type::message());
  EXPECT_EQ(parse_term("k1((x, m1))", lookup), Term::encrypt(key("k1"), Term::tuple({x, msg("m1")})));
}

TEST(Term, ParseErrorsArePositioned) {
  try {
    parse_term("k1(m1", lookup);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_GE(e.column(), 1u);
  }
  EXPECT_THROW(parse_term("nobody", lookup), ParseError);
  EXPECT_THROW(parse_term("m1(m2)", lookup), ParseError);
  EXPECT_THROW(parse_term("h(m1) m2", lookup), ParseError);
}

TEST(Term, Matching) {
  Term x = Term::variable("x", Type::message());
  Term y = Term::variable("y", Type::message());
  Term k = Term::variable("k", Type::key());
  Term k1 = key("k1"), m1 = msg("m1"), m2 = msg("m2");

  auto b = match_pattern(Term::encrypt(k1, Term::tuple({x, y})), Term::encrypt(k1, Term::tuple({m1, m2})), {}, {});
  ASSERT_TRUE(b);
  EXPECT_EQ(*b->lookup(x), m1);
  EXPECT_EQ(*b->lookup(y), m2);

  // k is frozen and already bound to k1: the key must agree
  Binding theta;
  theta.bind(k, k1);
  EXPECT_TRUE(match_pattern(Term::encrypt(k, x), Term::encrypt(k1, m1), {k}, theta));
  EXPECT_FALSE(match_pattern(Term::encrypt(k, x), Term::encrypt(key("k2"), m1), {k}, theta));
  // non-linear patterns need equal values
  EXPECT_TRUE(match_pattern(Term::tuple({x, x}), Term::tuple({m1, m1}), {}, {}));
  EXPECT_FALSE(match_pattern(Term::tuple({x, x}), Term::tuple({m1, m2}), {}, {}));
}

TEST(Term, MatchingReproducesGround) {
  // replace random subterms of a ground term by variables and match back
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    auto inst = oracle::random_dy_instance(rng);
    Term g = *inst.knowledge.begin();
    if (!g.is_app() || g.is(Fun::Decrypt) || g.is(Fun::Proj)) continue;
    std::vector<Term> args(g.args().begin(), g.args().end());
    std::size_t slot = rng() % args.size();
    if (g.fun().arg_types()[slot] != Type::message()) continue;
    Term var = Term::variable("x", Type::message());
    Term original = args[slot];
    args[slot] = var;
    Term pattern = Term::app(g.fun(), args);
    if (!(normalize(pattern) == pattern)) continue;
    auto b = match_pattern(pattern, g, {}, {});
    ASSERT_TRUE(b) << pattern << " vs " << g;
    EXPECT_EQ(b->apply(pattern), g);
    EXPECT_EQ(*b->lookup(var), original);
  }
}

TEST(Term, KeyHiding) {
  Term k = key("k"), j = key("j"), m = msg("m");
  EXPECT_TRUE(all_occurrences_hidden(k, Term::encrypt(k, m)));
  EXPECT_FALSE(all_occurrences_hidden(k, Term::tuple({k, m})));
  EXPECT_FALSE(all_occurrences_hidden(k, Term::encrypt(j, k)));
  EXPECT_TRUE(all_occurrences_hidden(TermSet{k, j}, Term::encrypt(j, k)));
  TermSet out;
  key_projection(k, Term::tuple({Term::encrypt(k, m), Term::encrypt(j, Term::encrypt(k, j))}), out);
  EXPECT_EQ(out, (TermSet{m, j}));
}

TEST(Term, KeyHidingAgreesWithOracle) {
  std::mt19937_64 rng(13);
  Term k1 = key("k1"), k2 = key("k2");
  for (int i = 0; i < 1000; ++i) {
    auto inst = oracle::random_dy_instance(rng);
    for (const auto& t : inst.knowledge) {
      for (const TermSet& group : {TermSet{k1}, TermSet{k1, k2}}) {
        EXPECT_EQ(all_occurrences_hidden(group, t), oracle::hidden_in(group, {t})) << t;
      }
      TermSet got;
      key_projection(k1, t, got);
      EXPECT_EQ(got, oracle::key_payloads(k1, {t})) << t;
    }
  }
}

TEST(Term, Renaming) {
  Term x = Term::variable("x", Type::message());
  Term y = Term::variable("y", Type::message());
  Renaming r;
  r.add(x, y);
  EXPECT_EQ(rename(Term::hash(x), r), Term::hash(y));
  EXPECT_EQ(rename(rename(Term::hash(x), r), r.inverse()), Term::hash(x));
  EXPECT_THROW(r.add(Term::variable("z", Type::message()), y), ContractViolation);
  EXPECT_THROW(r.add(Term::variable("q", Type::message()), Term::variable("kq", Type::key())), ContractViolation);
}
