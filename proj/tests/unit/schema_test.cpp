#include <gtest/gtest.h>

#include "oracles.hpp"
#include "procverify/errors.hpp"

using namespace procverify;

namespace {

ExploreOptions small_bounds() {
  ExploreOptions o;
  o.depth = 5;
  o.pool = 6;
  o.state_limit = 4000;
  return o;
}

}  // namespace

TEST(SecrecySchemas, PreservedOnRandomProcesses) {
  std::mt19937_64 rng(20240611);
  oracle::SchemaStats stats;
  std::size_t processes = 0;
  while (stats.transitions < 3000 && processes < 400) {
    DistProcess dp;
    try {
      dp = oracle::random_dp(rng);
    } catch (const Error&) {
      continue;
    }
    ++processes;
    auto r = explore(dp, small_bounds());
    oracle::check_schemas(dp, r, stats);
  }
  RecordProperty("transitions", static_cast<int>(stats.transitions));
  RecordProperty("instances", static_cast<int>(stats.instances));
  EXPECT_GE(stats.transitions, 1000u);
  EXPECT_GT(stats.instances, stats.transitions);
  for (std::size_t i = 0; i < std::min<std::size_t>(stats.failures.size(), 10); ++i) ADD_FAILURE() << stats.failures[i];
  EXPECT_TRUE(stats.failures.empty()) << stats.failures.size() << " counterexamples";
}

TEST(SecrecySchemas, OracleHelpers) {
  Term k = Term::constant("k", Type::key());
  Term j = Term::constant("j", Type::key());
  Term m = Term::constant("m", Type::message());
  EXPECT_TRUE(oracle::hidden_in({k}, {Term::encrypt(k, m)}));
  EXPECT_FALSE(oracle::hidden_in({k}, {Term::tuple({k, m})}));
  EXPECT_FALSE(oracle::hidden_in({k}, {Term::encrypt(j, k)}));
  EXPECT_TRUE(oracle::hidden_in({k, j}, {Term::encrypt(j, k)}));
  EXPECT_TRUE(oracle::fresh_in(m, {Term::encrypt(k, k)}));
  EXPECT_FALSE(oracle::fresh_in(m, {Term::hash(m)}));
  EXPECT_EQ(oracle::key_payloads(k, {Term::tuple({Term::encrypt(k, m), Term::encrypt(j, Term::encrypt(k, k))})}),
            (TermSet{m, k}));
}
