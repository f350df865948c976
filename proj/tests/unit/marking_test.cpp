#include <gtest/gtest.h>

#include <set>

#include "procverify/dsl.hpp"
#include "procverify/protocols.hpp"

using namespace procverify;

namespace {

std::set<std::string> pruned_labels(const ProtocolBundle& b, const VerificationReport& r) {
  std::set<std::string> out;
  for (const auto& p : r.pruned) out.insert(edge_label(b.dp, p.edge));
  return out;
}

std::set<std::string> node_labels(const DistProcess& dp, const TransitionGraph& g) {
  std::set<std::string> out;
  for (const auto& v : g.nodes()) out.insert(node_label(dp, v));
  return out;
}

const std::set<std::string> kWmfNodes = {"A^0T^0B^0", "A^1T^0B^0", "A^1T^1B^0", "A^1T^2B^0", "A^1T^2B^1",
                                         "A^2T^0B^0", "A^2T^1B^0", "A^2T^2B^0", "A^2T^2B^1", "A^2T^2B^2"};

}  // namespace

TEST(Marking, FullTransitionGraphs) {
  auto one = builtin("hidden-channel");
  auto g1 = build_tg(one.dp);
  EXPECT_EQ(g1.nodes().size(), 4u);
  EXPECT_EQ(g1.edges().size(), 4u);
  EXPECT_TRUE(g1.adversary_loops());
  auto three = builtin("trusted-channel");
  EXPECT_EQ(build_tg(three.dp).nodes().size(), 27u);
  EXPECT_THROW(build_tg(three.dp, 10), ResourceLimit);
}

TEST(Marking, SingleProcessGraphIsItself) {
  Term c = Term::variable("c", Type::channel());
  SeqProcess a = prefix({Action::send(c, Term::variable("x", Type::message())), {}, {}},
                        prefix({Action::send(c, Term::variable("z", Type::message())), {}, {}}, SeqProcess::stop("A")));
  DistProcess dp = compose({a});
  auto g = build_tg(dp);
  EXPECT_EQ(g.nodes().size(), a.node_count());
  EXPECT_EQ(g.edges().size(), a.edges().size());
}

TEST(Marking, NodeLabels) {
  auto b = builtin("trusted-channel");
  auto v = parse_node_label(b.dp, "A^1T^2B^0");
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, (TgNode{1, 2, 0}));
  EXPECT_EQ(parse_node_label(b.dp, "A^1 T^2 B^0"), v);
  EXPECT_EQ(parse_node_label(b.dp, "A1T2B0"), v);
  EXPECT_FALSE(parse_node_label(b.dp, "A^9T^0B^0"));
  EXPECT_FALSE(parse_node_label(b.dp, "A^0B^0"));
  EXPECT_EQ(node_label(b.dp, *v), "A^1T^2B^0");
}

TEST(Marking, GoldenMarkingsCertify) {
  for (const char* name : {"hidden-channel", "shared-key", "trusted-channel", "wmf"}) {
    auto b = builtin(name);
    auto r = check_marking(b.dp, b.marking);
    EXPECT_TRUE(r.problems.empty()) << name;
    EXPECT_TRUE(r.certified) << name;
    EXPECT_EQ(r.open_count(), 0u) << name;
  }
}

TEST(Marking, ExampleOnePrunesOneEdge) {
  auto b = builtin("hidden-channel");
  auto r = check_marking(b.dp, b.marking);
  EXPECT_EQ(pruned_labels(b, r), (std::set<std::string>{"A^0B^0 -[B: c_AB ? y]-> A^0B^1"}));
  auto g = reduce_tg(b.dp, b.marking, r);
  EXPECT_EQ(node_labels(b.dp, g), (std::set<std::string>{"A^0B^0", "A^1B^0", "A^1B^1"}));
  EXPECT_EQ(g.edges().size(), 2u);
}

TEST(Marking, ExampleTwoPrunesOneEdge) {
  auto b = builtin("shared-key");
  auto r = check_marking(b.dp, b.marking);
  EXPECT_EQ(pruned_labels(b, r), (std::set<std::string>{"A^0B^0 -[B: ? k_AB(y)]-> A^0B^1"}));
  EXPECT_EQ(reduce_tg(b.dp, b.marking, r).nodes().size(), 3u);
}

TEST(Marking, ExampleThreePrunesSevenEdges) {
  auto b = builtin("trusted-channel");
  auto r = check_marking(b.dp, b.marking);
  std::set<std::string> expected = {
      "A^0T^0B^0 -[T: c_AT ? u]-> A^0T^1B^0", "A^0T^0B^0 -[B: c_BT ? v]-> A^0T^0B^1",
      "A^1T^0B^0 -[B: c_BT ? v]-> A^1T^0B^1", "A^1T^1B^0 -[B: c_BT ? v]-> A^1T^1B^1",
      "A^1T^2B^1 -[B: v ? y]-> A^1T^2B^2",    "A^2T^0B^0 -[B: c_BT ? v]-> A^2T^0B^1",
      "A^2T^1B^0 -[B: c_BT ? v]-> A^2T^1B^1"};
  EXPECT_EQ(pruned_labels(b, r), expected);
  EXPECT_EQ(node_labels(b.dp, reduce_tg(b.dp, b.marking, r)), kWmfNodes);
}

TEST(Marking, ExampleFourPrunesSevenEdges) {
  auto b = builtin("wmf");
  auto r = check_marking(b.dp, b.marking);
  std::set<std::string> expected = {
      "A^0T^0B^0 -[T: ? k_AT(u)]-> A^0T^1B^0", "A^0T^0B^0 -[B: ? k_BT(v)]-> A^0T^0B^1",
      "A^1T^0B^0 -[B: ? k_BT(v)]-> A^1T^0B^1", "A^1T^1B^0 -[B: ? k_BT(v)]-> A^1T^1B^1",
      "A^1T^2B^1 -[B: ? v(y)]-> A^1T^2B^2",    "A^2T^0B^0 -[B: ? k_BT(v)]-> A^2T^0B^1",
      "A^2T^1B^0 -[B: ? k_BT(v)]-> A^2T^1B^1"};
  EXPECT_EQ(pruned_labels(b, r), expected);
  EXPECT_EQ(node_labels(b.dp, reduce_tg(b.dp, b.marking, r)), kWmfNodes);
}

TEST(Marking, PropertiesVerifyAtSingleNode) {
  for (const auto& [name, at] : std::vector<std::pair<const char*, const char*>>{{"hidden-channel", "A^1B^1"},
                                                                                  {"shared-key", "A^1B^1"},
                                                                                  {"trusted-channel", "A^2T^2B^2"},
                                                                                  {"wmf", "A^2T^2B^2"}}) {
    auto b = builtin(name);
    auto r = verify_property(b.dp, b.marking, b.property);
    ASSERT_TRUE(r.property) << name;
    EXPECT_TRUE(r.property->verified) << name;
    ASSERT_EQ(r.property->qualifying.size(), 1u) << name;
    EXPECT_EQ(node_label(b.dp, r.property->qualifying[0]), at) << name;
    EXPECT_TRUE(r.property->failing.empty()) << name;
  }
}

TEST(Marking, EmptyGoalIsVacuous) {
  auto b = builtin("hidden-channel");
  Property p = b.property;
  p.goal = {};
  auto r = verify_property(b.dp, b.marking, p);
  EXPECT_TRUE(r.property->verified);
}

TEST(Marking, UnprovableGoalFails) {
  auto b = builtin("hidden-channel");
  Property p = b.property;
  p.goal = parse_formula("{M[c_AB] = {}}", b.dp);
  auto r = verify_property(b.dp, b.marking, p);
  EXPECT_FALSE(r.property->verified);
  EXPECT_EQ(r.property->failing.size(), 1u);
}

TEST(Marking, CorruptedMarkingLeavesOpenObligation) {
  auto b = builtin("hidden-channel");
  Marking m = b.marking;
  TgNode v = *parse_node_label(b.dp, "A^1B^0");
  m.formulas[v] = parse_formula("{M[c_AB] = {}, fresh c_AB P*, fresh x P*}", b.dp);
  auto r = check_marking(b.dp, m);
  EXPECT_FALSE(r.certified);
  bool on_edge = false;
  for (const auto& o : r.obligations) {
    if (!o.discharged && o.where.find("A^0B^0") != std::string::npos && o.where.find("A^1B^0") != std::string::npos)
      on_edge = true;
  }
  EXPECT_TRUE(on_edge);
  // the oracle confirms it with a concrete trace
  auto oracle = crosscheck_with_oracle(b.dp, m, ExploreOptions{});
  ASSERT_FALSE(oracle.violations.empty());
  EXPECT_EQ(oracle.violations[0].node, "A^1B^0");
  EXPECT_FALSE(oracle.violations[0].trace.empty());
}

TEST(Marking, NoSecrecyFactsNoPruning) {
  auto b = builtin("trusted-channel");
  Marking m;
  auto full = build_tg(b.dp);
  for (const auto& v : full.nodes()) m.formulas[v] = {};
  auto r = check_marking(b.dp, m);
  EXPECT_TRUE(r.certified);
  EXPECT_TRUE(r.pruned.empty());
  EXPECT_EQ(reduce_tg(b.dp, m, r).nodes().size(), 27u);
}

TEST(Marking, InitialOnlyMarkingIsTriviallyClean) {
  auto b = builtin("hidden-channel");
  Marking m;
  m.formulas[initial_node(b.dp)] = {};
  auto oracle = crosscheck_with_oracle(b.dp, m, ExploreOptions{});
  EXPECT_TRUE(oracle.violations.empty());
}

TEST(Marking, OracleFindsNoViolationsOnGoldens) {
  for (const char* name : {"hidden-channel", "shared-key", "trusted-channel", "wmf"}) {
    auto b = builtin(name);
    auto checked = check_marking(b.dp, b.marking);
    auto r = crosscheck_with_oracle(b.dp, b.marking, ExploreOptions{}, checked.pruned);
    EXPECT_TRUE(r.clean()) << name;
    EXPECT_FALSE(r.truncated) << name;
    EXPECT_GT(r.transitions, 0u) << name;
  }
}

TEST(Marking, PropagationReproducesCertifiedMarking) {
  auto b = builtin("wmf-multisession");
  auto r = check_marking(b.dp, b.marking);
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.open_count(), 0u);
  EXPECT_EQ(b.marking.formulas.size(), 22u);
  EXPECT_EQ(r.pruned.size(), 25u);
  auto again = propagate_marking(b.dp, b.marking.at(initial_node(b.dp)));
  EXPECT_EQ(again, b.marking);
}
