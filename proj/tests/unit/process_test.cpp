#include <gtest/gtest.h>

#include "procverify/dsl.hpp"
#include "procverify/errors.hpp"
#include "procverify/protocols.hpp"

using namespace procverify;

namespace {

Term var(const char* n, Type t = Type::message()) { return Term::variable(n, t); }

SeqProcess sender() {
  Term c = var("c_AB", Type::channel());
  Term x = var("x");
  return prefix({Action::send(c, x), {}, {x}}, SeqProcess::stop("A"));
}

SeqProcess receiver() {
  Term c = var("c_AB", Type::channel());
  Term y = var("y");
  return prefix({Action::receive(c, y), {y}, {}}, SeqProcess::stop("B"));
}

}  // namespace

TEST(Process, PrefixBuildsChain) {
  SeqProcess a = sender();
  EXPECT_EQ(a.node_count(), 2u);
  ASSERT_EQ(a.edges().size(), 1u);
  EXPECT_EQ(a.edges()[0].from, 0u);
  EXPECT_EQ(a.edges()[0].to, 1u);
  EXPECT_TRUE(a.init_vars().contains(var("x")));
  EXPECT_TRUE(a.init_vars().contains(var("c_AB", Type::channel())));
  EXPECT_TRUE(a.hidden_vars().contains(var("x")));
  EXPECT_TRUE(a.terminal(1));
  EXPECT_EQ(a.node_label(1), "A^1");
}

TEST(Process, InputVariableStaysUninitialized) {
  SeqProcess b = receiver();
  EXPECT_FALSE(b.init_vars().contains(var("y")));
  EXPECT_TRUE(b.init_vars().contains(var("c_AB", Type::channel())));
}

TEST(Process, PrefixContracts) {
  Term c = var("c", Type::channel());
  Term x = var("x");
  EXPECT_THROW(prefix({Action::send(c, x), {var("z")}, {}}, SeqProcess::stop("A")), ContractViolation);
  EXPECT_THROW(prefix({Action::receive(c, x), {x}, {x}}, SeqProcess::stop("A")), ContractViolation);
}

TEST(Process, ChainedPrefixes) {
  Term c = var("c", Type::channel());
  SeqProcess p = prefix({Action::send(c, var("x")), {}, {}}, prefix({Action::send(c, var("z")), {}, {}}, SeqProcess::stop("A")));
  EXPECT_EQ(p.node_count(), 3u);
  EXPECT_EQ(p.edges().size(), 2u);
  EXPECT_TRUE(p.acyclic());
}

TEST(Process, ChoiceMergesInitialNodes) {
  Term c = var("c", Type::channel());
  SeqProcess p1 = prefix({Action::send(c, var("x")), {}, {}}, SeqProcess::stop("A"));
  SeqProcess p2 = prefix({Action::send(c, var("z")), {}, {}}, SeqProcess::stop("A"));
  SeqProcess s = choice({p1, p2});
  EXPECT_EQ(s.out_edges(0).size(), 2u);
  EXPECT_EQ(s.node_count(), 3u);
  EXPECT_EQ(choice({p1}).edges().size(), p1.edges().size());
  EXPECT_THROW(choice({}), ContractViolation);
}

TEST(Process, ComposeSharesDeclaredVariables) {
  Term c = var("c_AB", Type::channel());
  DistProcess dp = compose({sender(), receiver()}, {{c, {"A", "B"}}});
  ASSERT_EQ(dp.components().size(), 2u);
  EXPECT_TRUE(dp.is_shared(c));
  EXPECT_EQ(dp.index_of("B"), 1u);
  EXPECT_EQ(dp.index_of("Z"), npos);
  EXPECT_FALSE(dp.has_adversary());
  EXPECT_TRUE(with_adversary(dp).has_adversary());
}

TEST(Process, ComposeRenamesCollisionsApart) {
  // both components use x privately; the copies must not alias
  DistProcess dp = compose({sender(), sender().with_name("A2")});
  VarSet a = dp.components()[0].variables(), b = dp.components()[1].variables();
  for (const auto& v : a) {
    if (v.str() == "c_AB") continue;
    EXPECT_FALSE(b.contains(v)) << v;
  }
}

TEST(Process, ComposeRejectsUnknownMembers) {
  Term c = var("c_AB", Type::channel());
  EXPECT_THROW(compose({sender(), receiver()}, {{c, {"A", "Nobody"}}}), Error);
}

TEST(Process, ReplicateGivesDisjointCopies) {
  Term u = var("u");
  Term c = var("c", Type::channel());
  SeqProcess t = prefix({Action::receive(c, u), {u}, {}}, SeqProcess::stop("T"));
  DistProcess dp = replicate(t, 2, {c});
  ASSERT_EQ(dp.components().size(), 2u);
  EXPECT_EQ(dp.components()[0].name(), "T@1");
  EXPECT_EQ(dp.components()[1].name(), "T@2");
  EXPECT_EQ(dp.replication_bound(), 2u);
  VarSet a = dp.components()[0].variables(), b = dp.components()[1].variables();
  EXPECT_TRUE(a.contains(c));
  EXPECT_TRUE(b.contains(c));
  std::size_t common = 0;
  for (const auto& v : a) common += b.contains(v);
  EXPECT_EQ(common, 1u);
}

TEST(Process, BuiltinHiddenChannelShape) {
  auto b = builtin("hidden-channel");
  ASSERT_EQ(b.dp.components().size(), 2u);
  EXPECT_TRUE(b.dp.has_adversary());
  const auto& a = b.dp.components()[0];
  ASSERT_EQ(a.edges().size(), 1u);
  EXPECT_EQ(a.edges()[0].action.kind, ActionKind::Send);
  // c_AB is created fresh, so it carries the ~ marker
  EXPECT_EQ(to_expression(a), "(~c_AB ! x) . 0");
}

TEST(Process, WmfSessionsLayout) {
  auto one = wmf_sessions(2, parse_sessions("1->2"));
  // sender, one intermediary copy, one receiver copy
  EXPECT_EQ(one.dp.components().size(), 3u);
  EXPECT_TRUE(one.dp.has_adversary());
  auto two = wmf_sessions(3, parse_sessions("1->2,1->3"));
  ASSERT_EQ(two.layout.sessions.size(), 2u);
  EXPECT_FALSE(two.layout.sessions[0].payload == two.layout.sessions[1].payload);
  EXPECT_FALSE(two.layout.sessions[0].key == two.layout.sessions[1].key);
  EXPECT_THROW(wmf_sessions(2, {}), Error);
  EXPECT_THROW(wmf_sessions(2, parse_sessions("1->1")), Error);
  EXPECT_THROW(wmf_sessions(2, parse_sessions("1->3")), Error);
  EXPECT_THROW(parse_sessions("1-2"), Error);
}

TEST(Process, DotExport) {
  std::string dot = to_dot(sender());
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("c_AB ! x"), std::string::npos);
}
