#pragma once

// Typed symbolic terms modulo the destructor/constructor congruence
// decrypt(k,k(e)) = e, decrypt(A-,A(e)) = e, pr[n,i]((e1..en)) = ei.
//
// Terms are hash-consed: two structurally equal terms share one node, so
// equality is a pointer comparison. Nodes live for the whole process.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace procverify {

enum class TypeKind : std::uint8_t { Agent, Channel, Key, Message, Process, Tuple };

struct Type {
  TypeKind kind = TypeKind::Message;
  int arity = 0;  // only for Tuple

  static constexpr Type agent() { return {TypeKind::Agent, 0}; }
  static constexpr Type channel() { return {TypeKind::Channel, 0}; }
  static constexpr Type key() { return {TypeKind::Key, 0}; }
  static constexpr Type message() { return {TypeKind::Message, 0}; }
  static constexpr Type process() { return {TypeKind::Process, 0}; }
  static Type tuple(int n);

  friend bool operator==(const Type&, const Type&) = default;
  friend auto operator<=>(const Type&, const Type&) = default;
  std::string str() const;
};

std::optional<Type> parse_type(std::string_view name);

/// Every non-Process type is a subtype of Message.
bool is_subtype(const Type& sub, const Type& super);

enum class Fun : std::uint8_t { Tuple, Proj, Hash, Encrypt, Decrypt, PublicKey, PrivateKey, Signature };

struct FunSym {
  Fun fun = Fun::Tuple;
  int n = 0;  // tuple arity (Tuple, Proj)
  int i = 0;  // projection index, 1-based

  friend bool operator==(const FunSym&, const FunSym&) = default;
  friend auto operator<=>(const FunSym&, const FunSym&) = default;

  std::vector<Type> arg_types() const;
  Type result_type() const;
  std::string str() const;
};

enum class TermKind : std::uint8_t { Variable, Constant, App };

namespace detail {
struct TermNode;
}

class Term {
 public:
  Term() = default;

  static Term variable(std::string_view name, Type type);
  static Term constant(std::string_view name, Type type);
  /// Unique value `#id`, disjoint from user constants.
  static Term fresh(std::uint64_t id, Type type);
  /// Type-checked application; throws TypeError.
  static Term app(FunSym f, std::vector<Term> args);

  static Term open_channel();
  static Term tuple(std::vector<Term> items);
  static Term proj(int n, int i, Term t);
  static Term hash(Term t);
  static Term encrypt(Term key, Term body);
  static Term decrypt(Term key, Term body);
  static Term public_key(Term agent);
  static Term private_key(Term agent);
  static Term signature(Term body, Term agent);
  /// (e, A, sig(e, A))
  static Term signed_triple(Term body, Term agent);

  bool valid() const { return node_ != nullptr; }
  explicit operator bool() const { return valid(); }

  TermKind kind() const;
  bool is_variable() const { return kind() == TermKind::Variable; }
  bool is_constant() const { return kind() == TermKind::Constant; }
  bool is_app() const { return kind() == TermKind::App; }
  bool is_fresh() const;
  bool is(Fun f) const { return is_app() && fun().fun == f; }

  const std::string& name() const;
  Type type() const;
  const FunSym& fun() const;
  std::span<const Term> args() const;
  const Term& arg(std::size_t i) const { return args()[i]; }

  std::size_t size() const;
  std::size_t hash_value() const;
  std::uint64_t id() const;

  friend bool operator==(const Term& a, const Term& b) { return a.node_ == b.node_; }

  std::string str() const;

 private:
  explicit Term(const detail::TermNode* n) : node_(n) {}
  friend struct detail::TermNode;
  friend class TermFactory;
  friend Term normalize(const Term& t);

  const detail::TermNode* node_ = nullptr;
};

/// Deterministic structural order, used for every ordered container so
/// reports do not depend on interning order.
struct TermLess {
  bool operator()(const Term& a, const Term& b) const;
};

int compare_terms(const Term& a, const Term& b);

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash_value(); }
};

using TermSet = std::set<Term, TermLess>;
using VarSet = std::set<Term, TermLess>;

/// Innermost normal form under the three oriented rules.
Term normalize(const Term& t);

bool is_subterm(const Term& sub, const Term& whole);

/// Variables occurring in t.
VarSet variables_of(const Term& t);
void collect_variables(const Term& t, VarSet& out);
/// Constants and fresh values occurring in t.
void collect_atoms(const Term& t, TermSet& out);
/// Every subterm of t, including t.
void collect_subterms(const Term& t, TermSet& out);

/// Every occurrence of a key of `keys` in normalize(e) is hidden: it sits in
/// key position of an encryption, or inside the payload of an encryption
/// whose key belongs to `keys`.
bool all_occurrences_hidden(const TermSet& keys, const Term& e);
bool all_occurrences_hidden(const Term& key, const Term& e);

/// Payloads {e | k(e) ⊆ t}.
void key_projection(const Term& key, const Term& t, TermSet& out);

/// Finite map Variable -> Term, identity outside its domain.
class Binding {
 public:
  Binding() = default;

  /// Throws TypeError if value's type is not a subtype of var's type.
  void bind(const Term& var, const Term& value);
  std::optional<Term> lookup(const Term& var) const;
  bool binds(const Term& var) const { return map_.contains(var); }
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

  /// Simultaneous substitution without normalization.
  Term substitute(const Term& t) const;
  /// Substitution followed by normalize.
  Term apply(const Term& t) const;

  /// x -> (x^first)^second
  static Binding compose(const Binding& first, const Binding& second);

  const std::map<Term, Term, TermLess>& entries() const { return map_; }

  friend bool operator==(const Binding&, const Binding&) = default;

 private:
  std::map<Term, Term, TermLess> map_;
};

/// One-way matching on normal forms. Returns a binding of variables outside
/// `frozen` only, such that normalize((pattern^result)^theta) == normalize(ground).
std::optional<Binding> match_pattern(const Term& pattern, const Term& ground, const VarSet& frozen,
                                     const Binding& theta);

/// Partial injective variable renaming.
class Renaming {
 public:
  /// Throws ContractViolation on non-injective or type-changing entries.
  void add(const Term& from, const Term& to);
  std::optional<Term> lookup(const Term& var) const;
  const std::map<Term, Term, TermLess>& entries() const { return map_; }
  Renaming inverse() const;

  friend bool operator==(const Renaming&, const Renaming&) = default;

 private:
  std::map<Term, Term, TermLess> map_;
  TermSet targets_;
};

Term rename(const Term& t, const Renaming& r);

/// Resolves identifiers while parsing terms.
struct Symbol {
  enum class Kind { Variable, Constant } kind;
  Type type;
};
using SymbolLookup = std::function<std::optional<Symbol>(std::string_view)>;

/// Parses the term surface syntax. Throws ParseError.
Term parse_term(std::string_view text, const SymbolLookup& lookup);

std::ostream& operator<<(std::ostream& os, const Term& t);

/// Prints t, writing variables through `var_text` (used to emit DSL markers).
std::string print_term(const Term& t, const std::function<std::string(const Term&)>& var_text);

}  // namespace procverify

template <>
struct std::hash<procverify::Term> {
  std::size_t operator()(const procverify::Term& t) const noexcept { return t.hash_value(); }
};
