#pragma once

// Executable semantics of distributed processes and a bounded explorer.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "procverify/derive.hpp"
#include "procverify/process.hpp"

namespace procverify {

struct SpState {
  std::size_t node = 0;
  std::optional<Action> last;  // nullopt = init
  VarSet initialized;
  Binding binding;
  friend bool operator==(const SpState&, const SpState&) = default;
};

using ChannelMap = std::map<Term, TermSet, TermLess>;

struct DistState {
  std::vector<SpState> sp;
  ChannelMap channels;
  std::uint64_t fresh_counter = 0;
  std::size_t junk_sends = 0;  // unsolicited adversary sends so far

  const TermSet& channel(const Term& c) const;
  friend bool operator==(const DistState&, const DistState&) = default;
};

struct Transition {
  std::size_t actor = 0;     // component index; components().size() is the adversary
  std::size_t edge = npos;   // index into the actor's edges(); npos for the adversary
  Action action;             // ground instance (received message for Receive)
  DistState target;
};

struct ExploreOptions {
  std::size_t depth = 12;
  std::size_t pool = 24;
  std::size_t state_limit = 200000;
  std::size_t free_sends = 1;
  /// Replaces the pattern-directed adversary candidates when set.
  std::optional<TermSet> adversary_pool;
};

DistState initial_state(const DistProcess& p);

/// Analyzed adversary knowledge in S: declared constants, ∘, and every
/// message on a channel the adversary can name.
Knowledge adversary_knowledge(const DistProcess& p, const DistState& s);

std::vector<Transition> enabled_transitions(const DistProcess& p, const DistState& s,
                                            const ExploreOptions& opts = {});

struct ExploredState {
  DistState state;
  std::size_t parent = npos;
  std::size_t depth = 0;
  std::size_t actor = npos;
  std::size_t edge = npos;
  Action action;
};

struct ExploredEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t actor = 0;
  std::size_t edge = npos;
  Action action;
};

struct ExploreResult {
  std::vector<ExploredState> states;
  std::vector<ExploredEdge> edges;
  bool truncated = false;  // state limit hit; coverage is partial

  /// State indices from the initial state to `index`.
  std::vector<std::size_t> trace(std::size_t index) const;
};

/// Breadth-first, deterministic.
ExploreResult explore(const DistProcess& p, const ExploreOptions& opts = {});

struct SimulationStep {
  std::size_t actor = 0;
  Action action;
  std::string node;  // TG label after the step
};

struct Simulation {
  std::vector<SimulationStep> steps;
  DistState final_state;
  bool stuck = false;  // no transition was enabled before the step budget ran out
};

/// Random walk of at most `steps` transitions; the seed fixes every choice.
Simulation simulate(const DistProcess& p, std::size_t steps, std::uint64_t seed, const ExploreOptions& opts = {});

std::string actor_name(const DistProcess& p, std::size_t actor);

/// One line per transition: `actor ; action ; channel-delta`, then the final
/// channel inventory.
std::string dump_trace(const DistProcess& p, const ExploreResult& r, std::size_t index);

/// TG node label of a state, e.g. `A^1B^0`.
std::string node_label(const DistProcess& p, const DistState& s);

}  // namespace procverify
