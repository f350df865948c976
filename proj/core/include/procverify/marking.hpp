#pragma once

// Transition graphs, markings, marking certification, reduction and
// property verification.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "procverify/formula.hpp"

namespace procverify {

/// One SP node per component.
using TgNode = std::vector<std::size_t>;

struct TgEdge {
  TgNode from;
  std::size_t actor = 0;
  std::size_t edge = 0;  // index into the actor's edges()
  TgNode to;
  friend bool operator==(const TgEdge&, const TgEdge&) = default;
};

class TransitionGraph {
 public:
  TransitionGraph() = default;
  TransitionGraph(const DistProcess& p, std::vector<TgNode> nodes, std::vector<TgEdge> edges);

  const std::vector<TgNode>& nodes() const { return nodes_; }
  const std::vector<TgEdge>& edges() const { return edges_; }
  bool adversary_loops() const { return adversary_loops_; }
  bool contains(const TgNode& v) const;
  std::string label(const TgNode& v) const;
  std::string edge_label(const TgEdge& e) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> actions_;
  std::vector<TgNode> nodes_;
  std::vector<TgEdge> edges_;
  bool adversary_loops_ = false;
};

TgNode initial_node(const DistProcess& p);
std::vector<TgEdge> tg_out_edges(const DistProcess& p, const TgNode& v);
std::string node_label(const DistProcess& p, const TgNode& v);
std::string edge_label(const DistProcess& p, const TgEdge& e);
/// Accepts `A^1B^0`, `A^1 B^0` and `A1B0` styles.
std::optional<TgNode> parse_node_label(const DistProcess& p, std::string_view text);
TgNode node_of(const DistState& s);

/// Full product graph; throws ResourceLimit beyond `limit` nodes.
TransitionGraph build_tg(const DistProcess& p, std::size_t limit = 1000000);

struct Marking {
  std::map<TgNode, Formula> formulas;

  bool contains(const TgNode& v) const { return formulas.contains(v); }
  const Formula& at(const TgNode& v) const { return formulas.at(v); }
  friend bool operator==(const Marking&, const Marking&) = default;
};

struct Obligation {
  enum class Site : std::uint8_t { Initial, Edge, AdversaryLoop, Boundary } site = Site::Initial;
  std::string where;   // node or edge label
  std::string target;  // EF text, empty for boundary edges
  std::string rule;    // discharging rule, empty if open
  bool discharged = false;
  std::string note;
};

struct PrunedEdge {
  TgEdge edge;
  std::string rule;  // D1 channel content, D2 key projection
};

/// `B = B^2`: component B sits at its node 2.
struct NodePredicate {
  std::size_t component = 0;
  std::size_t node = 0;
  friend bool operator==(const NodePredicate&, const NodePredicate&) = default;
};

struct Property {
  std::vector<NodePredicate> at;
  Formula guard;
  Formula goal;
  friend bool operator==(const Property&, const Property&) = default;
};

struct PropertyResult {
  std::vector<TgNode> qualifying;
  std::vector<TgNode> failing;
  bool verified = false;
};

struct VerificationReport {
  std::vector<std::string> problems;  // well-formedness
  std::vector<Obligation> obligations;
  std::vector<PrunedEdge> pruned;
  bool certified = false;
  std::optional<PropertyResult> property;

  std::size_t open_count() const;
};

VerificationReport check_marking(const DistProcess& p, const Marking& m);

/// Marked nodes with their surviving edges, restricted to nodes reachable
/// from the initial node.
TransitionGraph reduce_tg(const DistProcess& p, const Marking& m);
TransitionGraph reduce_tg(const DistProcess& p, const Marking& m, const VerificationReport& r);

bool node_satisfies(const TgNode& v, const std::vector<NodePredicate>& at);

VerificationReport verify_property(const DistProcess& p, const Marking& m, const Property& prop);

struct OracleViolation {
  std::size_t state = 0;
  std::string node;
  std::string formula;  // failing EF, or a description
  std::string trace;
};

struct OracleReport {
  std::size_t states = 0;
  std::size_t transitions = 0;
  bool truncated = false;
  std::vector<OracleViolation> violations;       // β_V false in a reached state
  std::vector<OracleViolation> escapes;          // reached node outside G
  std::vector<OracleViolation> pruned_traversed; // a pruned edge was taken

  bool clean() const { return violations.empty() && escapes.empty() && pruned_traversed.empty(); }
};

OracleReport crosscheck_with_oracle(const DistProcess& p, const Marking& m, const ExploreOptions& opts,
                                    const std::vector<PrunedEdge>& pruned = {});
OracleReport crosscheck_with_oracle(const DistProcess& p, const Marking& m, const ExploreResult& explored,
                                    const std::vector<PrunedEdge>& pruned = {});

/// Forward propagation of the checker's post-conditions from an initial
/// formula over the region reachable through non-pruned edges. Produces a
/// candidate marking; certification is still check_marking's job.
Marking propagate_marking(const DistProcess& p, const Formula& initial, std::size_t node_limit = 5000);

}  // namespace procverify
