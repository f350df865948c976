#include <gtest/gtest.h>

#include "procverify/dsl.hpp"
#include "procverify/errors.hpp"
#include "procverify/protocols.hpp"

using namespace procverify;

namespace {

struct Walk {
  ProtocolBundle b;
  std::vector<DistState> states;  // honest run, one state per step
};

// follows the first enabled honest transition until none is left
Walk honest_run(const char* name) {
  Walk w{builtin(name), {}};
  w.states.push_back(initial_state(w.b.dp));
  std::size_t adversary = w.b.dp.components().size();
  for (;;) {
    bool moved = false;
    for (const auto& t : enabled_transitions(w.b.dp, w.states.back())) {
      if (t.actor == adversary) continue;
      w.states.push_back(t.target);
      moved = true;
      break;
    }
    if (!moved) return w;
  }
}

bool holds_text(const Walk& w, std::size_t i, const char* text) {
  return holds(w.b.dp, w.states[i], parse_formula(text, w.b.dp));
}

}  // namespace

TEST(Formula, ChannelContentAfterSend) {
  auto w = honest_run("hidden-channel");
  ASSERT_EQ(w.states.size(), 3u);
  EXPECT_TRUE(holds_text(w, 0, "{M[c_AB] = {}}"));
  EXPECT_TRUE(holds_text(w, 1, "{M[c_AB] = {x}}"));
  EXPECT_FALSE(holds_text(w, 1, "{M[c_AB] = {}}"));
  EXPECT_TRUE(holds_text(w, 2, "{x = y, M[c_AB] = {x}}"));
}

TEST(Formula, UninitializedVariableMakesAtomFalse) {
  auto w = honest_run("hidden-channel");
  EXPECT_FALSE(holds_text(w, 0, "{x = y}"));
  EXPECT_FALSE(holds_text(w, 0, "{y = y}"));
  EXPECT_TRUE(holds_text(w, 0, "{x = x}"));
}

TEST(Formula, KeyProjection) {
  auto w = honest_run("shared-key");
  EXPECT_TRUE(holds_text(w, 0, "{inv(k_AB, M[open]) = {}}"));
  EXPECT_TRUE(holds_text(w, 1, "{inv(k_AB, M[open]) = {x}}"));
  auto e = eval_expr(w.b.dp, w.states[1], Expression::unite(Expression::terms({}), Expression::channel(Term::open_channel())));
  EXPECT_EQ(e, eval_expr(w.b.dp, w.states[1], Expression::channel(Term::open_channel())));
}

TEST(Formula, SecrecyAtomsAlongWmf) {
  auto w = honest_run("wmf");
  for (std::size_t i = 0; i < w.states.size(); ++i) {
    EXPECT_TRUE(holds_text(w, i, "{hidden {k_AB, k_AT, k_BT} Channels, hidden {k_AB, k_AT, k_BT} P*}")) << i;
    // x may sit inside a sealed message, but P* never derives it
    Term x = Evaluator(w.b.dp, w.states[i]).value(Term::variable("x", Type::message()));
    EXPECT_FALSE(adversary_knowledge(w.b.dp, w.states[i]).derivable(x)) << i;
  }
  EXPECT_TRUE(holds_text(w, 1, "{fresh x P*}"));
  EXPECT_FALSE(holds_text(w, 2, "{fresh x P*}"));
  // a single-key group does not hide k_AB under k_AT
  std::size_t sent = 1;
  EXPECT_FALSE(holds_text(w, sent, "{hidden {k_AB} Channels}"));
  EXPECT_TRUE(holds_text(w, sent, "{hidden {k_AT} Channels}"));
  EXPECT_FALSE(holds_text(w, 0, "{fresh x A}"));
  EXPECT_TRUE(holds_text(w, 0, "{fresh x B}"));
}

TEST(Formula, SetRelations) {
  auto w = honest_run("hidden-channel");
  EXPECT_TRUE(holds_text(w, 1, "{M[c_AB] <= {x, c_AB}}"));
  EXPECT_TRUE(holds_text(w, 1, "{{x, c_AB} >= M[c_AB]}"));
  EXPECT_FALSE(holds_text(w, 1, "{{} >= M[c_AB]}"));
  EXPECT_TRUE(holds_text(w, 1, "{(M[c_AB] & {x}) = {x}}"));
  EXPECT_TRUE(holds_text(w, 1, "{(M[c_AB] | {c_AB}) = {x, c_AB}}"));
  EXPECT_TRUE(holds_text(w, 1, "{X[A] >= {x}}"));
  EXPECT_THROW(eval_expr(w.b.dp, w.states[1], Expression::complement(Expression::terms({}))), UnsupportedExpression);
}

TEST(Formula, Entailment) {
  auto b = builtin("hidden-channel");
  auto f = [&](const char* t) { return parse_formula(t, b.dp); };
  EXPECT_TRUE(implies(f("{x = y}"), f("{y = x}")));
  EXPECT_TRUE(implies(f("{x = y, M[c_AB] = {x}}"), f("{M[c_AB] = {y}}")));
  EXPECT_FALSE(implies(f("{M[c_AB] = {x}}"), f("{M[c_AB] = {}}")));
  EXPECT_TRUE(implies(f("{M[c_AB] = {x}}"), f("{M[c_AB] <= {x}}")));
  EXPECT_TRUE(implies(f("{fresh c_AB Channels}"), f("{fresh c_AB {open}}")));
  EXPECT_TRUE(implies(f("{}"), f("{}")));
}

TEST(Formula, EntailmentFromWmfMarking) {
  auto b = builtin("trusted-channel");
  auto node = parse_node_label(b.dp, "A^1T^2B^1");
  ASSERT_TRUE(node);
  const Formula& beta = b.marking.at(*node);
  EXPECT_TRUE(implies(beta, parse_formula("{v = c_AB}", b.dp)));
}

TEST(Formula, EntailmentIsSound) {
  // whatever implies() derives from a marking formula must hold wherever
  // that formula holds
  auto w = honest_run("wmf");
  const auto& m = w.b.marking;
  for (const auto& s : w.states) {
    TgNode v = node_of(s);
    if (!m.contains(v)) continue;
    const Formula& beta = m.at(v);
    ASSERT_TRUE(holds(w.b.dp, s, beta));
    for (const auto& [other, f] : m.formulas) {
      for (const auto& ef : f) {
        if (implies(beta, ef)) EXPECT_TRUE(holds(w.b.dp, s, ef)) << ef.str();
      }
    }
  }
}

TEST(Formula, CanonicalIsSortedAndUnique) {
  auto b = builtin("hidden-channel");
  Formula f = parse_formula("{x = y, M[c_AB] = {}, x = y}", b.dp);
  Formula c = canonical(f);
  EXPECT_EQ(c.size(), 2u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  EXPECT_EQ(canonical(c), c);
}

TEST(Formula, PrintParseRoundTrip) {
  for (const auto& name : builtin_names()) {
    auto b = builtin(name);
    for (const auto& [v, f] : b.marking.formulas) {
      Formula back = parse_formula(formula_str(f), b.dp);
      EXPECT_EQ(canonical(back), canonical(f)) << name << " " << formula_str(f);
    }
  }
}
