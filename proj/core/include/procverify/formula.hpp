#pragma once

// Expressions, elementary formulas and their values in distributed states.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "procverify/errors.hpp"
#include "procverify/semantics.hpp"

namespace procverify {

enum class ExprKind : std::uint8_t { Terms, Knowledge, Channel, KeyProjection, Intersect, Union, Complement };

class Expression {
 public:
  Expression();  // empty term set
  static Expression terms(TermSet ts);
  static Expression term(const Term& t) { return terms(TermSet{t}); }
  /// X_P of a component, or of the adversary when process is "P*".
  static Expression knowledge(std::string process);
  static Expression channel(Term c);
  static Expression key_projection(Term key, Expression inner);
  static Expression intersect(Expression a, Expression b);
  static Expression unite(Expression a, Expression b);
  static Expression complement(Expression a);

  ExprKind kind() const;
  const TermSet& term_set() const;
  const std::string& process() const;
  const Term& subject() const;  // channel or key
  const std::vector<Expression>& operands() const;

  /// Applies f to every term inside (term sets, channels, keys).
  Expression map_terms(const std::function<Term(const Term&)>& f) const;
  void collect_terms(TermSet& out) const;

  std::string str() const;
  friend bool operator==(const Expression& a, const Expression& b);
  friend bool operator<(const Expression& a, const Expression& b);

  struct Node;

 private:
  std::shared_ptr<const Node> node_;
};

enum class EfKind : std::uint8_t { Eq, Sub, Sup, Fresh, Hidden };

/// Target of a ⊥ atom: a named component, the adversary (`P*`), all
/// channels, or an explicit channel list.
struct Scope {
  enum class Kind : std::uint8_t { Process, Channels, ChannelList } kind = Kind::Channels;
  std::string process;
  TermSet channels;

  static Scope of_process(std::string p) { return {Kind::Process, std::move(p), {}}; }
  static Scope all_channels() { return {Kind::Channels, {}, {}}; }
  static Scope channel_list(TermSet cs) { return {Kind::ChannelList, {}, std::move(cs)}; }
  bool adversary() const { return kind == Kind::Process && process == "P*"; }
  friend bool operator==(const Scope&, const Scope&) = default;
  friend auto operator<=>(const Scope&, const Scope&) = default;
  std::string str() const;
};

struct ElementaryFormula {
  EfKind kind = EfKind::Eq;
  Expression lhs, rhs;  // set relations
  TermSet subjects;     // ⊥: variables each fresh; ⊥_K: one key group
  Scope scope;

  static ElementaryFormula eq(Expression a, Expression b);
  static ElementaryFormula sub(Expression a, Expression b);
  static ElementaryFormula sup(Expression a, Expression b);
  static ElementaryFormula term_eq(const Term& a, const Term& b) { return eq(Expression::term(a), Expression::term(b)); }
  static ElementaryFormula fresh(TermSet vars, Scope s);
  static ElementaryFormula hidden(TermSet keys, Scope s);

  ElementaryFormula map_terms(const std::function<Term(const Term&)>& f) const;
  void collect_terms(TermSet& out) const;
  std::string str() const;
  friend bool operator==(const ElementaryFormula& a, const ElementaryFormula& b);
  friend bool operator<(const ElementaryFormula& a, const ElementaryFormula& b);
};

using Formula = std::vector<ElementaryFormula>;

std::string formula_str(const Formula& f);
/// Sorted, duplicates removed.
Formula canonical(Formula f);

/// Values of variables in a state: the union of all component bindings.
Binding global_binding(const DistState& s);

/// Thrown internally when an expression mentions an uninitialized variable.
struct Undefined : Error {
  using Error::Error;
};

class Evaluator {
 public:
  Evaluator(const DistProcess& p, const DistState& s);

  /// Throws UnsupportedExpression for Complement, Undefined for
  /// uninitialized variables.
  TermSet eval(const Expression& e);
  Term value(const Term& t);
  bool holds(const ElementaryFormula& f);
  bool holds(const Formula& f);
  const Knowledge& adversary();

 private:
  TermSet scope_terms(const Scope& s);

  const DistProcess& p_;
  const DistState& s_;
  Binding theta_;
  std::optional<Knowledge> adversary_;
};

TermSet eval_expr(const DistProcess& p, const DistState& s, const Expression& e);
/// Uninitialized variables make an EF false.
bool holds(const DistProcess& p, const DistState& s, const ElementaryFormula& f);
bool holds(const DistProcess& p, const DistState& s, const Formula& f);

/// Sound, incomplete entailment: membership modulo congruence closure of
/// the equalities of `premises`, plus ⊆/⊇ weakening.
bool implies(const Formula& premises, const Formula& conclusion);
bool implies(const Formula& premises, const ElementaryFormula& conclusion);

/// Equality reasoning over a fixed premise set, reusable across queries.
class Congruence {
 public:
  /// `atoms` are variables whose values are pairwise distinct fresh
  /// constants; classes prefer them as representatives.
  explicit Congruence(const Formula& premises, VarSet atoms = {});
  Term canon(const Term& t);
  Expression canon(const Expression& e);
  bool entails(const ElementaryFormula& f);
  bool equal(const Term& a, const Term& b) { return canon(a) == canon(b); }
  /// Known ground term sets equal to e (from premises E = {..}).
  std::vector<TermSet> known_values(const Expression& e);

 private:
  void add_term(const Term& t);
  Term find(const Term& t);
  void unite(const Term& a, const Term& b);
  void close();
  std::string expr_key(const Expression& e);
  std::string find_expr(const std::string& k);
  void unite_expr(const std::string& a, const std::string& b);

  bool better(const Term& a, const Term& b) const;

  Formula premises_;
  VarSet atoms_;
  std::map<Term, Term, TermLess> parent_;
  std::map<std::string, std::string> expr_parent_;
  std::map<std::string, Expression> expr_of_;
  std::vector<ElementaryFormula> canon_premises_;
};

}  // namespace procverify
