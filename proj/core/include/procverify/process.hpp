#pragma once

// Sequential processes (action-labelled trees/graphs) and their
// composition into distributed processes.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "procverify/term.hpp"

namespace procverify {

enum class ActionKind : std::uint8_t { Send, Receive, Assign };

struct Action {
  ActionKind kind = ActionKind::Send;
  Term first;   // channel, or lhs of an assignment
  Term second;  // payload, pattern, or rhs

  static Action send(Term channel, Term payload);
  static Action receive(Term channel, Term pattern);
  static Action assign(Term lhs, Term rhs);

  bool external() const { return kind != ActionKind::Assign; }
  const Term& channel() const { return first; }

  friend bool operator==(const Action&, const Action&) = default;
  std::string str() const;
};

struct RefinedAction {
  Action action;
  VarSet input_vars;  // hatted
  VarSet fresh_vars;  // barred
};

struct Edge {
  std::size_t from = 0;
  Action action;
  std::size_t to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class SeqProcess {
 public:
  SeqProcess() = default;
  /// The terminated process 0.
  static SeqProcess stop(std::string name);
  /// Direct graph construction. Nodes are renumbered breadth-first from the
  /// initial node; unreachable nodes are dropped. Throws ContractViolation.
  static SeqProcess from_graph(std::string name, std::size_t node_count, std::size_t initial,
                               std::vector<Edge> edges, TermSet init_vars, VarSet hidden_vars);

  const std::string& name() const { return name_; }
  std::size_t node_count() const { return node_count_; }
  /// Always 0 after normalization.
  std::size_t initial() const { return 0; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<const Edge*> out_edges(std::size_t node) const;
  const TermSet& init_vars() const { return init_vars_; }
  const VarSet& hidden_vars() const { return hidden_vars_; }
  bool terminal(std::size_t node) const { return out_edges(node).empty(); }
  bool acyclic() const;

  /// `A^k`
  std::string node_label(std::size_t node) const;
  /// Variables occurring in edges or in X.
  VarSet variables() const;

  SeqProcess renamed(const Renaming& r, std::string new_name) const;
  SeqProcess with_name(std::string new_name) const;
  /// Adds variables to X and X̄.
  SeqProcess with_hidden(const VarSet& vars) const;

  friend bool operator==(const SeqProcess&, const SeqProcess&) = default;

 private:
  std::string name_;
  std::size_t node_count_ = 1;
  std::vector<Edge> edges_;
  TermSet init_vars_;
  VarSet hidden_vars_;
};

/// α.P
SeqProcess prefix(const RefinedAction& alpha, const SeqProcess& p);
/// Σ P_i; the name of the first member is kept.
SeqProcess choice(const std::vector<SeqProcess>& family);

/// A variable x_{P1..Pn} held by the listed processes.
struct SharedGroup {
  Term var;
  std::vector<std::string> members;
  friend bool operator==(const SharedGroup&, const SharedGroup&) = default;
};

class DistProcess;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

/// Flattens the parts; renames colliding non-shared variables apart with an
/// `@i` suffix; shared groups are validated against component names.
DistProcess compose(const std::vector<std::variant<SeqProcess, DistProcess>>& parts,
                    const std::vector<SharedGroup>& shared = {});

/// Truncated P^∞: copies named P@1..P@k, variables outside `keep` suffixed @i.
DistProcess replicate(const SeqProcess& p, std::size_t copies, const VarSet& keep = {});

DistProcess with_adversary(const DistProcess& p);

class DistProcess {
 public:
  const std::vector<SeqProcess>& components() const { return components_; }
  const std::vector<SharedGroup>& shared() const { return shared_; }
  bool has_adversary() const { return adversary_; }
  /// Truncation bound recorded by replicate (0 if none).
  std::size_t replication_bound() const { return replication_bound_; }
  /// Constants declared by the protocol; the adversary knows all of them.
  const TermSet& constants() const { return constants_; }
  /// Original -> composed variable names, per component.
  const std::vector<Renaming>& renamings() const { return renamings_; }

  std::size_t index_of(std::string_view name) const;  // npos if absent
  bool is_shared(const Term& var) const;
  /// Shared groups a component belongs to.
  std::vector<const SharedGroup*> groups_of(std::size_t component) const;

  void add_constants(const TermSet& cs);
  void set_replication_bound(std::size_t n) { replication_bound_ = n; }

  /// Structural equality; composition renamings are bookkeeping and ignored.
  friend bool operator==(const DistProcess& a, const DistProcess& b);

 private:
  friend DistProcess compose(const std::vector<std::variant<SeqProcess, DistProcess>>&,
                             const std::vector<SharedGroup>&);
  friend DistProcess replicate(const SeqProcess&, std::size_t, const VarSet&);
  friend DistProcess with_adversary(const DistProcess&);

  std::vector<SeqProcess> components_;
  std::vector<SharedGroup> shared_;
  std::vector<Renaming> renamings_;
  TermSet constants_;
  bool adversary_ = false;
  std::size_t replication_bound_ = 0;
};

/// Group membership test: `T` matches components `T` and `T@i`.
bool member_matches(std::string_view member, std::string_view component);

std::string to_dot(const SeqProcess& p);
/// Prefix/choice expression with `^`/`~` markers, e.g. `(~c ! x) . 0`.
std::string to_expression(const SeqProcess& p);

}  // namespace procverify
