#pragma once

// Test-side oracles. Nothing here calls the library's Knowledge, Evaluator
// or marking code; they only share the term representation.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "procverify/semantics.hpp"

namespace oracle {

using procverify::DistProcess;
using procverify::DistState;
using procverify::Term;
using procverify::TermSet;

/// Fixpoint of every Dolev-Yao rule over the normalized subterms of
/// `knowledge` and `goal`; subterm locality makes this exact.
bool brute_force_derivable(const TermSet& knowledge, const Term& goal);

/// Everything derivable inside the subterm universe of `base`.
TermSet bounded_closure(const TermSet& base, const TermSet& extra_universe = {});

struct DyInstance {
  TermSet knowledge;
  Term goal;
};

/// At most five knowledge terms of depth at most three.
DyInstance random_dy_instance(std::mt19937_64& rng);

/// Value of a variable in a state, from the component bindings.
std::optional<Term> value_of(const DistState& s, const Term& var);

/// X_P of component i, or of the adversary when i == components().size().
TermSet knowledge_of(const DistProcess& p, const DistState& s, std::size_t i);
TermSet all_channel_messages(const DistState& s);

bool fresh_in(const Term& value, const TermSet& scope);
/// No occurrence of a key of `keys` in `scope` outside key position or the
/// payload of an encryption under a key of `keys`.
bool hidden_in(const TermSet& keys, const TermSet& scope);
TermSet key_payloads(const Term& key, const TermSet& ts);

/// A few components with short action chains over shared channels and keys,
/// composed with the adversary.
DistProcess random_dp(std::mt19937_64& rng);

struct SchemaStats {
  std::size_t transitions = 0;
  std::size_t instances = 0;  // schema instances whose premise held in S
  std::vector<std::string> failures;
};

/// Instantiates the secrecy-preservation schemas for the acting process of
/// every explored edge and checks S |= beta implies S' |= beta.
void check_schemas(const DistProcess& p, const procverify::ExploreResult& r, SchemaStats& stats);

}  // namespace oracle
