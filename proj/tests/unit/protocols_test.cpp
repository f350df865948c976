#include <gtest/gtest.h>

#include "procverify/errors.hpp"
#include "procverify/protocols.hpp"

using namespace procverify;

namespace {

Term nonce(std::uint64_t id) { return Term::fresh(id, Type::message()); }

struct Keys {
  Term a1t = Term::fresh(901, Type::key());
  Term a2t = Term::fresh(902, Type::key());
  Term a12 = Term::fresh(903, Type::key());
  KeyTable table;
  Keys() {
    table.n = 2;
    table.agent_keys[a1t] = 1;
    table.agent_keys[a2t] = 2;
    table.session_keys[a12] = {1, 2};
  }
};

ExploreOptions bounded(std::size_t depth) {
  ExploreOptions o;
  o.depth = depth;
  return o;
}

}  // namespace

TEST(Protocols, BuiltinNames) {
  auto names = builtin_names();
  EXPECT_EQ(names, (std::vector<std::string>{"hidden-channel", "shared-key", "trusted-channel", "wmf", "wmf-multisession"}));
  EXPECT_THROW(builtin("nope"), ContractViolation);
}

TEST(Protocols, ClassifiesEveryForm) {
  Keys k;
  Term a1 = agent_constant(1), a2 = agent_constant(2), zero = zero_constant();
  Term r = nonce(1), r2 = nonce(2), x = nonce(3);
  auto tag = [&](const Term& m) { return classify_message(m, k.table).tag; };
  EXPECT_EQ(tag(Term::encrypt(k.a1t, Term::tuple({a1, a2, r}))), FormTag::Form1);
  EXPECT_EQ(tag(Term::encrypt(k.a1t, Term::tuple({a1, a2, r, r2}))), FormTag::Form2);
  EXPECT_EQ(tag(Term::encrypt(k.a1t, Term::tuple({a1, a1, a2, r2, k.a12}))), FormTag::Form3);
  EXPECT_EQ(tag(Term::encrypt(k.a2t, Term::tuple({zero, r}))), FormTag::Form4);
  EXPECT_EQ(tag(Term::encrypt(k.a2t, Term::tuple({r, r2, a2}))), FormTag::Form5);
  EXPECT_EQ(tag(Term::encrypt(k.a2t, Term::tuple({zero, a1, a2, r2, k.a12}))), FormTag::Form6);
  EXPECT_EQ(tag(Term::encrypt(k.a12, Term::tuple({x, a1, a2, r}))), FormTag::Form7);
  EXPECT_EQ(tag(Term::hash(x)), FormTag::Unclassified);
  // the owner of the key must match the sender field
  EXPECT_EQ(tag(Term::encrypt(k.a2t, Term::tuple({a1, a2, r}))), FormTag::Unclassified);
  // a Form6 without the sender name is not a Form6
  EXPECT_EQ(tag(Term::encrypt(k.a2t, Term::tuple({zero, zero, a2, r2, k.a12}))), FormTag::Unclassified);
}

TEST(Protocols, RhoLinksNonceChains) {
  Keys k;
  Term a1 = agent_constant(1), a2 = agent_constant(2), zero = zero_constant();
  Term r = nonce(1), r2 = nonce(2), r3 = nonce(4), r4 = nonce(5), x = nonce(3);
  std::vector<Term> msgs = {
      Term::encrypt(k.a1t, Term::tuple({a1, a2, r})),                  // 0 Form1
      Term::encrypt(k.a1t, Term::tuple({a1, a2, r, r2})),              // 1 Form2
      Term::encrypt(k.a1t, Term::tuple({a1, a1, a2, r2, k.a12})),      // 2 Form3
      Term::encrypt(k.a2t, Term::tuple({zero, r3})),                   // 3 Form4
      Term::encrypt(k.a2t, Term::tuple({r3, r4, a2})),                 // 4 Form5
      Term::encrypt(k.a2t, Term::tuple({zero, a1, a2, r4, k.a12})),    // 5 Form6
      Term::encrypt(k.a12, Term::tuple({x, a1, a2, r3})),              // 6 Form7
  };
  std::vector<MessageForm> forms;
  for (const auto& m : msgs) forms.push_back(classify_message(m, k.table));
  Rho rho = build_rho(forms);
  EXPECT_TRUE(rho.contains({0, 1}));
  EXPECT_TRUE(rho.contains({1, 2}));
  EXPECT_TRUE(rho.contains({3, 4}));
  EXPECT_TRUE(rho.contains({5, 6}));
  EXPECT_TRUE(rho.contains({0, 6}));  // through the shared session key
  EXPECT_TRUE(build_rho({}).empty());
  // a Form2 with an unrelated nonce breaks the first link
  forms[1] = classify_message(Term::encrypt(k.a1t, Term::tuple({a1, a2, nonce(7), r2})), k.table);
  EXPECT_FALSE(build_rho(forms).contains({0, 1}));
}

TEST(Protocols, SingleSessionTraceCompletes) {
  auto model = wmf_sessions(2, parse_sessions("1->2"));
  auto r = explore(model.dp, bounded(16));
  auto report = check_wmf_integrity(model.dp, model.layout, r);
  EXPECT_TRUE(report.ok());
  EXPECT_GT(report.completed_receptions, 0u);
  EXPECT_EQ(report.form_counts[FormTag::Unclassified], 0u);
  EXPECT_GT(report.rho_pairs, 0u);

  // in the completing state the Form1 message reaches the Form7 one
  bool seen = false;
  for (const auto& st : r.states) {
    const auto& recv = model.layout.receivers[0];
    if (st.state.sp[recv.component].node != model.layout.receiver_final) continue;
    auto keys = key_table(model.layout, st.state);
    std::vector<MessageForm> forms;
    for (const auto& m : tracked_messages(keys, st.state)) forms.push_back(classify_message(m, keys));
    Rho rho = build_rho(forms);
    for (const auto& [a, b] : rho) seen |= forms[a].tag == FormTag::Form1 && forms[b].tag == FormTag::Form7;
  }
  EXPECT_TRUE(seen);
}

TEST(Protocols, DepthBoundedIntegrityIsVacuousEarly) {
  auto model = wmf_sessions(2, parse_sessions("1->2"));
  auto r = explore(model.dp, bounded(3));
  auto report = check_wmf_integrity(model.dp, model.layout, r);
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.completed_receptions, 0u);
}

TEST(Protocols, MutantIsCaught) {
  auto model = wmf_sessions(2, parse_sessions("1->2"), WmfVariant::DropSender);
  auto r = explore(model.dp, ExploreOptions{});
  auto report = check_wmf_integrity(model.dp, model.layout, r);
  ASSERT_FALSE(report.ok());
  EXPECT_FALSE(report.issues[0].trace.empty());
}

TEST(Protocols, LayoutSurvivesRecovery) {
  auto model = wmf_sessions(3, parse_sessions("1->2,1->3"));
  auto layout = wmf_layout(model.dp);
  EXPECT_EQ(layout.n, 3u);
  EXPECT_EQ(layout.sessions.size(), 2u);
  EXPECT_EQ(layout.receivers.size(), 2u);
  EXPECT_THROW(wmf_layout(builtin("wmf").dp), ContractViolation);
}

TEST(Protocols, SecretsStayUnderived) {
  for (const char* name : {"hidden-channel", "shared-key", "trusted-channel", "wmf", "wmf-multisession"}) {
    auto b = builtin(name);
    ASSERT_FALSE(b.secrets.empty()) << name;
    auto r = explore(b.dp, ExploreOptions{});
    EXPECT_TRUE(check_secrecy(b.dp, b.secrets, r).empty()) << name;
  }
}

TEST(Protocols, SecrecyCheckerSeesLeaks) {
  // a sender that publishes its payload on the open channel
  Term x = Term::variable("x", Type::message());
  SeqProcess leak = prefix({Action::send(Term::open_channel(), x), {}, {x}}, SeqProcess::stop("A"));
  DistProcess dp = with_adversary(compose({leak}));
  auto r = explore(dp, ExploreOptions{});
  auto v = check_secrecy(dp, {x}, r);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].node, "A^1");
}

TEST(Protocols, MultisessionBundle) {
  auto b = builtin("wmf-multisession");
  auto r = verify_property(b.dp, b.marking, b.property);
  EXPECT_TRUE(r.certified);
  ASSERT_TRUE(r.property);
  EXPECT_TRUE(r.property->verified);
  auto unmarked = wmf_bundle(2, parse_sessions("1->2,1->2"), WmfVariant::Standard, false);
  EXPECT_TRUE(unmarked.marking.formulas.empty());
  EXPECT_FALSE(unmarked.secrets.empty());
}
