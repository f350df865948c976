#include "procverify/term.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "procverify/errors.hpp"
#include "term_parser.hpp"

namespace procverify {

// ---------------------------------------------------------------------------
// Types and function symbols

Type Type::tuple(int n) {
  if (n < 1) throw TypeError("tuple arity must be positive");
  return {TypeKind::Tuple, n};
}

std::string Type::str() const {
  switch (kind) {
    case TypeKind::Agent: return "Agent";
    case TypeKind::Channel: return "Channel";
    case TypeKind::Key: return "Key";
    case TypeKind::Message: return "Message";
    case TypeKind::Process: return "Process";
    case TypeKind::Tuple: return "Tuple" + std::to_string(arity);
  }
  return "?";
}

std::optional<Type> parse_type(std::string_view name) {
  if (name == "Agent") return Type::agent();
  if (name == "Channel") return Type::channel();
  if (name == "Key") return Type::key();
  if (name == "Message") return Type::message();
  if (name == "Process") return Type::process();
  if (name.starts_with("Tuple") && name.size() > 5) {
    int n = 0;
    for (char c : name.substr(5)) {
      if (c < '0' || c > '9') return std::nullopt;
      n = n * 10 + (c - '0');
    }
    if (n >= 1) return Type::tuple(n);
  }
  return std::nullopt;
}

bool is_subtype(const Type& sub, const Type& super) {
  if (sub == super) return true;
  return super.kind == TypeKind::Message && sub.kind != TypeKind::Process;
}

namespace {

// Message is the top of the value types, so a Message-typed term may stand
// wherever a more specific value type is expected; its runtime value decides.
bool compatible(const Type& actual, const Type& expected) {
  if (is_subtype(actual, expected)) return true;
  return actual.kind == TypeKind::Message && expected.kind != TypeKind::Process;
}

}  // namespace

std::vector<Type> FunSym::arg_types() const {
  switch (fun) {
    case Fun::Tuple: return std::vector<Type>(static_cast<std::size_t>(n), Type::message());
    case Fun::Proj: return {Type::tuple(n)};
    case Fun::Hash: return {Type::message()};
    case Fun::Encrypt:
    case Fun::Decrypt: return {Type::key(), Type::message()};
    case Fun::PublicKey:
    case Fun::PrivateKey: return {Type::agent()};
    case Fun::Signature: return {Type::message(), Type::agent()};
  }
  return {};
}

Type FunSym::result_type() const {
  switch (fun) {
    case Fun::Tuple: return Type::tuple(n);
    case Fun::PublicKey:
    case Fun::PrivateKey: return Type::key();
    default: return Type::message();
  }
}

std::string FunSym::str() const {
  switch (fun) {
    case Fun::Tuple: return "tuple_" + std::to_string(n);
    case Fun::Proj: return "pr[" + std::to_string(n) + "," + std::to_string(i) + "]";
    case Fun::Hash: return "h";
    case Fun::Encrypt: return "encrypt";
    case Fun::Decrypt: return "decrypt";
    case Fun::PublicKey: return "pub";
    case Fun::PrivateKey: return "priv";
    case Fun::Signature: return "sig";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Interning

namespace detail {

struct TermNode {
  TermKind kind;
  bool fresh = false;
  std::uint64_t fresh_id = 0;
  std::string name;
  Type type;
  FunSym fun;
  std::vector<Term> args;
  std::size_t hash = 0;
  std::uint64_t id = 0;
  std::size_t size = 1;
  mutable std::atomic<const TermNode*> normal_form{nullptr};

  TermNode(TermKind k, bool f, std::uint64_t fid, std::string n, Type t, FunSym fs, std::vector<Term> a)
      : kind(k), fresh(f), fresh_id(fid), name(std::move(n)), type(t), fun(fs), args(std::move(a)) {}
};

}  // namespace detail

class TermFactory {
 public:
  static TermFactory& instance() {
    static TermFactory f;
    return f;
  }

  Term make(TermKind kind, bool fresh, std::uint64_t fresh_id, std::string_view name, Type type, FunSym fun,
            std::vector<Term> args) {
    Key key{kind, fresh, fresh_id, std::string(name), type, fun, {}};
    key.args.reserve(args.size());
    for (const auto& a : args) key.args.push_back(a.node_);
    std::size_t h = key_hash(key);
    std::lock_guard lock(mu_);
    auto& bucket = table_[h];
    for (const detail::TermNode* n : bucket) {
      if (same(*n, key)) return Term(n);
    }
    auto& node = nodes_.emplace_back(kind, fresh, fresh_id, std::string(name), type, fun, std::move(args));
    node.hash = h;
    node.id = next_id_++;
    for (const auto& a : node.args) node.size += a.size();
    bucket.push_back(&node);
    return Term(&node);
  }

 private:
  struct Key {
    TermKind kind;
    bool fresh;
    std::uint64_t fresh_id;
    std::string name;
    Type type;
    FunSym fun;
    std::vector<const detail::TermNode*> args;
  };

  static std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

  static std::size_t key_hash(const Key& k) {
    std::size_t h = static_cast<std::size_t>(k.kind);
    h = mix(h, k.fresh ? k.fresh_id + 1 : 0);
    h = mix(h, std::hash<std::string>{}(k.name));
    h = mix(h, static_cast<std::size_t>(k.type.kind) * 131 + static_cast<std::size_t>(k.type.arity));
    h = mix(h, static_cast<std::size_t>(k.fun.fun) * 7919 + static_cast<std::size_t>(k.fun.n) * 31 +
                   static_cast<std::size_t>(k.fun.i));
    for (const auto* a : k.args) h = mix(h, a->hash);
    return h;
  }

  static bool same(const detail::TermNode& n, const Key& k) {
    if (n.kind != k.kind || n.fresh != k.fresh || n.fresh_id != k.fresh_id || n.name != k.name ||
        n.type != k.type || n.fun != k.fun || n.args.size() != k.args.size())
      return false;
    for (std::size_t i = 0; i < k.args.size(); ++i) {
      if (n.args[i].node_ != k.args[i]) return false;
    }
    return true;
  }

  std::mutex mu_;
  std::deque<detail::TermNode> nodes_;
  std::unordered_map<std::size_t, std::vector<const detail::TermNode*>> table_;
  std::uint64_t next_id_ = 1;
};

namespace {

Term make_app_unchecked(FunSym f, std::vector<Term> args) {
  return TermFactory::instance().make(TermKind::App, false, 0, "", f.result_type(), f, std::move(args));
}

}  // namespace

Term Term::variable(std::string_view name, Type type) {
  if (name.empty()) throw TypeError("empty variable name");
  return TermFactory::instance().make(TermKind::Variable, false, 0, name, type, {}, {});
}

Term Term::constant(std::string_view name, Type type) {
  if (name.empty()) throw TypeError("empty constant name");
  return TermFactory::instance().make(TermKind::Constant, false, 0, name, type, {}, {});
}

Term Term::fresh(std::uint64_t id, Type type) {
  return TermFactory::instance().make(TermKind::Constant, true, id, "#" + std::to_string(id), type, {}, {});
}

Term Term::app(FunSym f, std::vector<Term> args) {
  if ((f.fun == Fun::Tuple || f.fun == Fun::Proj) && f.n < 1) throw TypeError("tuple arity must be positive");
  if (f.fun == Fun::Proj && (f.i < 1 || f.i > f.n)) throw TypeError("projection index out of range");
  auto expected = f.arg_types();
  if (args.size() != expected.size()) {
    throw TypeError(f.str() + " expects " + std::to_string(expected.size()) + " arguments, got " +
                    std::to_string(args.size()));
  }
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (!args[k].valid()) throw TypeError("null argument to " + f.str());
    if (!compatible(args[k].type(), expected[k])) {
      throw TypeError("argument " + std::to_string(k + 1) + " of " + f.str() + " has type " +
                      args[k].type().str() + ", expected " + expected[k].str() + " (" + args[k].str() + ")");
    }
  }
  return make_app_unchecked(f, std::move(args));
}

Term Term::open_channel() { return constant("open", Type::channel()); }
Term Term::tuple(std::vector<Term> items) {
  int n = static_cast<int>(items.size());
  return app({Fun::Tuple, n, 0}, std::move(items));
}
Term Term::proj(int n, int i, Term t) { return app({Fun::Proj, n, i}, {std::move(t)}); }
Term Term::hash(Term t) { return app({Fun::Hash, 0, 0}, {std::move(t)}); }
Term Term::encrypt(Term key, Term body) { return app({Fun::Encrypt, 0, 0}, {std::move(key), std::move(body)}); }
Term Term::decrypt(Term key, Term body) { return app({Fun::Decrypt, 0, 0}, {std::move(key), std::move(body)}); }
Term Term::public_key(Term agent) { return app({Fun::PublicKey, 0, 0}, {std::move(agent)}); }
Term Term::private_key(Term agent) { return app({Fun::PrivateKey, 0, 0}, {std::move(agent)}); }
Term Term::signature(Term body, Term agent) { return app({Fun::Signature, 0, 0}, {std::move(body), std::move(agent)}); }
Term Term::signed_triple(Term body, Term agent) {
  Term s = signature(body, agent);
  return tuple({std::move(body), std::move(agent), std::move(s)});
}

TermKind Term::kind() const { return node_->kind; }
bool Term::is_fresh() const { return node_->fresh; }
const std::string& Term::name() const { return node_->name; }
Type Term::type() const { return node_->type; }
const FunSym& Term::fun() const { return node_->fun; }
std::span<const Term> Term::args() const { return node_->args; }
std::size_t Term::size() const { return node_->size; }
std::size_t Term::hash_value() const { return node_ ? node_->hash : 0; }
std::uint64_t Term::id() const { return node_->id; }

// ---------------------------------------------------------------------------
// Ordering

int compare_terms(const Term& a, const Term& b) {
  if (a == b) return 0;
  if (!a.valid()) return -1;
  if (!b.valid()) return 1;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (a.kind() != TermKind::App) {
    if (a.is_fresh() != b.is_fresh()) return a.is_fresh() ? 1 : -1;
    if (a.is_fresh()) {
      // numeric order on #n
      auto na = a.name().size(), nb = b.name().size();
      if (na != nb) return na < nb ? -1 : 1;
    }
    if (int c = a.name().compare(b.name()); c != 0) return c < 0 ? -1 : 1;
    if (a.type() != b.type()) return a.type() < b.type() ? -1 : 1;
    return 0;
  }
  if (a.fun() != b.fun()) return a.fun() < b.fun() ? -1 : 1;
  auto aa = a.args(), ba = b.args();
  if (aa.size() != ba.size()) return aa.size() < ba.size() ? -1 : 1;
  for (std::size_t i = 0; i < aa.size(); ++i) {
    if (int c = compare_terms(aa[i], ba[i]); c != 0) return c;
  }
  return 0;
}

bool TermLess::operator()(const Term& a, const Term& b) const { return compare_terms(a, b) < 0; }

// ---------------------------------------------------------------------------
// Normalization

namespace {

Term rewrite_root(const Term& t) {
  if (t.is(Fun::Decrypt)) {
    const Term& key = t.arg(0);
    const Term& body = t.arg(1);
    if (body.is(Fun::Encrypt)) {
      const Term& enc_key = body.arg(0);
      if (key.is(Fun::PrivateKey) && enc_key.is(Fun::PublicKey) && key.arg(0) == enc_key.arg(0)) {
        return body.arg(1);
      }
      if (key == enc_key && !enc_key.is(Fun::PublicKey)) return body.arg(1);
    }
  } else if (t.is(Fun::Proj)) {
    const Term& body = t.arg(0);
    if (body.is(Fun::Tuple) && body.fun().n == t.fun().n) {
      return body.arg(static_cast<std::size_t>(t.fun().i - 1));
    }
  }
  return t;
}

}  // namespace

Term normalize(const Term& t) {
  if (!t.valid() || !t.is_app()) return t;
  if (const auto* cached = t.node_->normal_form.load(std::memory_order_acquire)) return Term(cached);
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const auto& a : t.args()) {
    Term n = normalize(a);
    changed |= !(n == a);
    args.push_back(n);
  }
  Term rebuilt = changed ? make_app_unchecked(t.fun(), std::move(args)) : t;
  // the contractum of each rule is an argument, already in normal form
  Term result = rewrite_root(rebuilt);
  t.node_->normal_form.store(result.node_, std::memory_order_release);
  if (!(rebuilt == t)) rebuilt.node_->normal_form.store(result.node_, std::memory_order_release);
  return result;
}

bool is_subterm(const Term& sub, const Term& whole) {
  if (sub == whole) return true;
  if (!whole.is_app() || sub.size() >= whole.size()) return false;
  for (const auto& a : whole.args()) {
    if (is_subterm(sub, a)) return true;
  }
  return false;
}

void collect_variables(const Term& t, VarSet& out) {
  if (t.is_variable()) {
    out.insert(t);
  } else if (t.is_app()) {
    for (const auto& a : t.args()) collect_variables(a, out);
  }
}

VarSet variables_of(const Term& t) {
  VarSet out;
  collect_variables(t, out);
  return out;
}

void collect_atoms(const Term& t, TermSet& out) {
  if (t.is_constant()) {
    out.insert(t);
  } else if (t.is_app()) {
    for (const auto& a : t.args()) collect_atoms(a, out);
  }
}

void collect_subterms(const Term& t, TermSet& out) {
  if (!out.insert(t).second) return;
  if (t.is_app()) {
    for (const auto& a : t.args()) collect_subterms(a, out);
  }
}

namespace {

bool hidden_walk(const TermSet& keys, const Term& t, bool protected_) {
  if (!protected_ && keys.contains(t)) return false;
  if (!t.is_app()) return true;
  if (t.is(Fun::Encrypt)) {
    const Term& key = t.arg(0);
    bool key_in_group = keys.contains(key);
    if (!key_in_group && !hidden_walk(keys, key, protected_)) return false;
    return hidden_walk(keys, t.arg(1), protected_ || key_in_group);
  }
  for (const auto& a : t.args()) {
    if (!hidden_walk(keys, a, protected_)) return false;
  }
  return true;
}

}  // namespace

bool all_occurrences_hidden(const TermSet& keys, const Term& e) { return hidden_walk(keys, normalize(e), false); }

bool all_occurrences_hidden(const Term& key, const Term& e) { return all_occurrences_hidden(TermSet{key}, e); }

void key_projection(const Term& key, const Term& t, TermSet& out) {
  if (!t.is_app()) return;
  if (t.is(Fun::Encrypt) && t.arg(0) == key) out.insert(t.arg(1));
  for (const auto& a : t.args()) key_projection(key, a, out);
}

// ---------------------------------------------------------------------------
// Bindings

void Binding::bind(const Term& var, const Term& value) {
  if (!var.is_variable()) throw TypeError("binding target is not a variable: " + var.str());
  if (!compatible(value.type(), var.type())) {
    throw TypeError("cannot bind " + var.str() + " : " + var.type().str() + " to " + value.str() + " : " +
                    value.type().str());
  }
  map_[var] = value;
}

std::optional<Term> Binding::lookup(const Term& var) const {
  auto it = map_.find(var);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Term Binding::substitute(const Term& t) const {
  if (map_.empty()) return t;
  if (t.is_variable()) {
    auto it = map_.find(t);
    return it == map_.end() ? t : it->second;
  }
  if (!t.is_app()) return t;
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const auto& a : t.args()) {
    Term s = substitute(a);
    changed |= !(s == a);
    args.push_back(std::move(s));
  }
  return changed ? Term::app(t.fun(), std::move(args)) : t;
}

Term Binding::apply(const Term& t) const { return normalize(substitute(t)); }

Binding Binding::compose(const Binding& first, const Binding& second) {
  Binding out;
  for (const auto& [var, value] : first.map_) out.map_[var] = second.substitute(value);
  for (const auto& [var, value] : second.map_) {
    if (!first.map_.contains(var)) out.map_[var] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matching

namespace {

bool match_into(const Term& pattern, const Term& ground, const VarSet& frozen, Binding& out) {
  if (pattern.is_variable() && !frozen.contains(pattern)) {
    if (auto prev = out.lookup(pattern)) return *prev == ground;
    if (!compatible(ground.type(), pattern.type())) return false;
    out.bind(pattern, ground);
    return true;
  }
  if (!pattern.is_app()) return pattern == ground;
  if (!ground.is_app() || pattern.fun() != ground.fun()) return false;
  for (std::size_t i = 0; i < pattern.args().size(); ++i) {
    if (!match_into(pattern.arg(i), ground.arg(i), frozen, out)) return false;
  }
  return true;
}

Term substitute_frozen(const Term& t, const VarSet& frozen, const Binding& theta) {
  if (t.is_variable()) {
    if (!frozen.contains(t)) return t;
    auto v = theta.lookup(t);
    return v ? *v : t;
  }
  if (!t.is_app()) return t;
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const auto& a : t.args()) args.push_back(substitute_frozen(a, frozen, theta));
  return make_app_unchecked(t.fun(), std::move(args));
}

}  // namespace

std::optional<Binding> match_pattern(const Term& pattern, const Term& ground, const VarSet& frozen,
                                     const Binding& theta) {
  Term p = normalize(substitute_frozen(pattern, frozen, theta));
  Term g = normalize(ground);
  Binding result;
  if (!match_into(p, g, frozen, result)) return std::nullopt;
  // soundness check exactly as stated: (pattern^result)^theta == ground
  Term back;
  try {
    back = theta.apply(result.apply(pattern));
  } catch (const TypeError&) {
    return std::nullopt;
  }
  if (!(back == g)) return std::nullopt;
  return result;
}

// ---------------------------------------------------------------------------
// Renaming

void Renaming::add(const Term& from, const Term& to) {
  if (!from.is_variable() || !to.is_variable()) throw ContractViolation("renaming maps variables to variables");
  if (from.type() != to.type()) throw ContractViolation("renaming must preserve types: " + from.str());
  auto it = map_.find(from);
  if (it != map_.end()) {
    if (it->second == to) return;
    throw ContractViolation("renaming maps " + from.str() + " twice");
  }
  if (targets_.contains(to)) throw ContractViolation("renaming is not injective at " + to.str());
  map_.emplace(from, to);
  targets_.insert(to);
}

std::optional<Term> Renaming::lookup(const Term& var) const {
  auto it = map_.find(var);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Renaming Renaming::inverse() const {
  Renaming r;
  for (const auto& [a, b] : map_) r.add(b, a);
  return r;
}

Term rename(const Term& t, const Renaming& r) {
  if (t.is_variable()) {
    auto v = r.lookup(t);
    return v ? *v : t;
  }
  if (!t.is_app()) return t;
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const auto& a : t.args()) args.push_back(rename(a, r));
  return make_app_unchecked(t.fun(), std::move(args));
}

// ---------------------------------------------------------------------------
// Printing

namespace {

bool is_atom(const Term& t) { return !t.is_app(); }

using VarText = std::function<std::string(const Term&)>;
thread_local const VarText* tl_var_text = nullptr;

std::string atom_text(const Term& t) {
  if (t.is_variable() && tl_var_text) return (*tl_var_text)(t);
  return t.name();
}

void print(std::ostream& os, const Term& t);

void print_body(std::ostream& os, const Term& body) {
  if (body.is(Fun::Tuple) && body.fun().n >= 2) {
    for (std::size_t i = 0; i < body.args().size(); ++i) {
      if (i) os << ",";
      print(os, body.arg(i));
    }
  } else {
    print(os, body);
  }
}

void print(std::ostream& os, const Term& t) {
  if (!t.valid()) {
    os << "<null>";
    return;
  }
  if (!t.is_app()) {
    os << atom_text(t);
    return;
  }
  const auto& f = t.fun();
  switch (f.fun) {
    case Fun::Tuple:
      if (f.n == 1) {
        os << "tuple(";
        print(os, t.arg(0));
        os << ")";
      } else {
        os << "(";
        print_body(os, t);
        os << ")";
      }
      return;
    case Fun::Proj:
      os << "pr[" << f.n << "," << f.i << "](";
      print(os, t.arg(0));
      os << ")";
      return;
    case Fun::Hash:
      os << "h(";
      print(os, t.arg(0));
      os << ")";
      return;
    case Fun::Encrypt: {
      const Term& key = t.arg(0);
      if (is_atom(key) && key.type().kind == TypeKind::Key) {
        os << atom_text(key) << "(";
      } else if (key.is(Fun::PublicKey) && is_atom(key.arg(0)) && key.arg(0).type().kind == TypeKind::Agent) {
        os << atom_text(key.arg(0)) << "(";
      } else {
        os << "enc(";
        print(os, key);
        os << ",";
        print(os, t.arg(1));
        os << ")";
        return;
      }
      print_body(os, t.arg(1));
      os << ")";
      return;
    }
    case Fun::Decrypt:
      os << "decrypt(";
      print(os, t.arg(0));
      os << ",";
      print(os, t.arg(1));
      os << ")";
      return;
    case Fun::PublicKey:
      os << "pub(";
      print(os, t.arg(0));
      os << ")";
      return;
    case Fun::PrivateKey:
      os << "priv(";
      print(os, t.arg(0));
      os << ")";
      return;
    case Fun::Signature:
      os << "sig(";
      print(os, t.arg(0));
      os << ",";
      print(os, t.arg(1));
      os << ")";
      return;
  }
}

}  // namespace

std::string Term::str() const {
  std::ostringstream os;
  print(os, *this);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Term& t) {
  print(os, t);
  return os;
}

std::string print_term(const Term& t, const std::function<std::string(const Term&)>& var_text) {
  const VarText* saved = tl_var_text;
  tl_var_text = &var_text;
  std::ostringstream os;
  print(os, t);
  tl_var_text = saved;
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

namespace {

constexpr std::string_view kReserved[] = {"h", "pr", "priv", "pub", "sig", "enc", "decrypt", "tuple"};

bool reserved(std::string_view w) {
  return std::find(std::begin(kReserved), std::end(kReserved), w) != std::end(kReserved);
}

class TermReader {
 public:
  TermReader(TokenCursor& cur, const SymbolLookup& lookup, const MarkerHook* markers)
      : cur_(cur), lookup_(lookup), markers_(markers) {}

  Term term() {
    const Token start = cur_.peek();
    try {
      return primary();
    } catch (const TypeError& e) {
      throw ParseError(e.what(), start.line, start.column);
    }
  }

 private:
  std::vector<Term> arg_list() {
    cur_.expect("(");
    std::vector<Term> items;
    items.push_back(primary());
    while (cur_.accept(",")) items.push_back(primary());
    cur_.expect(")");
    return items;
  }

  Term one_arg() {
    auto items = arg_list();
    if (items.size() != 1) cur_.fail("expected exactly one argument");
    return items[0];
  }

  static Term body_of(std::vector<Term> items) {
    return items.size() == 1 ? items[0] : Term::tuple(std::move(items));
  }

  Term symbol(const Token& tok, std::optional<Type> hint) {
    if (tok.text == "open") return Term::open_channel();
    auto sym = lookup_ ? lookup_(tok.text) : std::nullopt;
    if (!sym) {
      if (tok.text[0] == '#' ) {
        // unreachable: '#' is punctuation
      }
      throw ParseError("unknown identifier '" + tok.text + "'", tok.line, tok.column);
    }
    (void)hint;
    return sym->kind == Symbol::Kind::Variable ? Term::variable(tok.text, sym->type)
                                               : Term::constant(tok.text, sym->type);
  }

  Term after_head(const Term& head, const Token& tok) {
    if (!cur_.is_punct("(")) return head;
    Type t = head.type();
    if (t.kind == TypeKind::Key) return Term::encrypt(head, body_of(arg_list()));
    if (t.kind == TypeKind::Agent) return Term::encrypt(Term::public_key(head), body_of(arg_list()));
    throw ParseError("'" + tok.text + "' of type " + t.str() + " cannot be applied", tok.line, tok.column);
  }

  Term primary() {
    const Token tok = cur_.peek();
    if (cur_.is_punct("^") || cur_.is_punct("~")) {
      char marker = tok.text[0];
      if (!markers_) cur_.fail("markers are only allowed in process actions");
      cur_.next();
      const Token& name = cur_.expect_ident();
      Term v = symbol(name, std::nullopt);
      if (!v.is_variable()) throw ParseError("only variables can be marked", name.line, name.column);
      (*markers_)(marker, v, name);
      return after_head(v, name);
    }
    if (cur_.is_punct("#")) {
      cur_.next();
      const Token& num = cur_.expect_ident();
      std::uint64_t id = 0;
      for (char c : num.text) {
        if (c < '0' || c > '9') throw ParseError("fresh value needs a number", num.line, num.column);
        id = id * 10 + static_cast<std::uint64_t>(c - '0');
      }
      auto sym = lookup_ ? lookup_("#" + num.text) : std::nullopt;
      Type type = sym ? sym->type : (cur_.is_punct("(") ? Type::key() : Type::message());
      return after_head(Term::fresh(id, type), num);
    }
    if (cur_.is_punct("(")) {
      auto items = arg_list();
      return items.size() == 1 ? items[0] : Term::tuple(std::move(items));
    }
    if (tok.kind != Tok::Ident) cur_.fail("expected term");
    cur_.next();
    if (reserved(tok.text) && cur_.is_punct("(") ) {
      if (tok.text == "h") return Term::hash(one_arg());
      if (tok.text == "priv") return Term::private_key(one_arg());
      if (tok.text == "pub") return Term::public_key(one_arg());
      if (tok.text == "tuple") return Term::tuple({one_arg()});
      auto items = arg_list();
      if (items.size() != 2) throw ParseError(tok.text + " expects two arguments", tok.line, tok.column);
      if (tok.text == "sig") return Term::signature(items[0], items[1]);
      if (tok.text == "enc") return Term::encrypt(items[0], items[1]);
      if (tok.text == "decrypt") return Term::decrypt(items[0], items[1]);
      throw ParseError("unexpected '" + tok.text + "'", tok.line, tok.column);
    }
    if (tok.text == "pr" && cur_.is_punct("[")) {
      cur_.next();
      int n = number();
      cur_.expect(",");
      int i = number();
      cur_.expect("]");
      return Term::proj(n, i, one_arg());
    }
    return after_head(symbol(tok, std::nullopt), tok);
  }

  int number() {
    const Token& t = cur_.expect_ident();
    int v = 0;
    for (char c : t.text) {
      if (c < '0' || c > '9') throw ParseError("expected number", t.line, t.column);
      v = v * 10 + (c - '0');
    }
    return v;
  }

  TokenCursor& cur_;
  const SymbolLookup& lookup_;
  const MarkerHook* markers_;
};

}  // namespace

Term parse_term_at(TokenCursor& cur, const SymbolLookup& lookup, const MarkerHook* markers) {
  return TermReader(cur, lookup, markers).term();
}

}  // namespace detail

Term parse_term(std::string_view text, const SymbolLookup& lookup) {
  detail::TokenCursor cur(detail::tokenize(text));
  Term t = detail::parse_term_at(cur, lookup, nullptr);
  if (!cur.at_end()) cur.fail("trailing input after term");
  return t;
}

}  // namespace procverify
