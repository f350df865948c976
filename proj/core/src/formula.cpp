#include "procverify/formula.hpp"

#include <algorithm>
#include <sstream>

#include "procverify/errors.hpp"

namespace procverify {

struct Expression::Node {
  ExprKind kind = ExprKind::Terms;
  TermSet terms;
  std::string process;
  Term subject;
  std::vector<Expression> ops;
};

namespace {

std::shared_ptr<const Expression::Node> empty_terms_node() {
  static const auto node = std::make_shared<const Expression::Node>();
  return node;
}

int compare_sets(const TermSet& a, const TermSet& b) {
  auto i = a.begin(), j = b.begin();
  for (; i != a.end() && j != b.end(); ++i, ++j) {
    if (int c = compare_terms(*i, *j); c != 0) return c;
  }
  if (i == a.end() && j == b.end()) return 0;
  return i == a.end() ? -1 : 1;
}

std::string set_str(const TermSet& ts) {
  std::string out = "{";
  bool first = true;
  for (const auto& t : ts) {
    out += (first ? "" : ", ") + t.str();
    first = false;
  }
  return out + "}";
}

std::string subject_str(const TermSet& ts) { return ts.size() == 1 ? ts.begin()->str() : set_str(ts); }

}  // namespace

Expression::Expression() : node_(empty_terms_node()) {}

Expression Expression::terms(TermSet ts) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->terms = std::move(ts);
  e.node_ = std::move(n);
  return e;
}

Expression Expression::knowledge(std::string process) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Knowledge;
  n->process = std::move(process);
  e.node_ = std::move(n);
  return e;
}

Expression Expression::channel(Term c) {
  if (c.type().kind != TypeKind::Channel && c.type().kind != TypeKind::Message) {
    throw TypeError("M[" + c.str() + "]: not a channel");
  }
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Channel;
  n->subject = std::move(c);
  e.node_ = std::move(n);
  return e;
}

Expression Expression::key_projection(Term key, Expression inner) {
  if (key.type().kind != TypeKind::Key && key.type().kind != TypeKind::Message) {
    throw TypeError("inv(" + key.str() + ", ...): not a key");
  }
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::KeyProjection;
  n->subject = std::move(key);
  n->ops = {std::move(inner)};
  e.node_ = std::move(n);
  return e;
}

Expression Expression::intersect(Expression a, Expression b) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Intersect;
  n->ops = {std::move(a), std::move(b)};
  e.node_ = std::move(n);
  return e;
}

Expression Expression::unite(Expression a, Expression b) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Union;
  n->ops = {std::move(a), std::move(b)};
  e.node_ = std::move(n);
  return e;
}

Expression Expression::complement(Expression a) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = ExprKind::Complement;
  n->ops = {std::move(a)};
  e.node_ = std::move(n);
  return e;
}

ExprKind Expression::kind() const { return node_->kind; }
const TermSet& Expression::term_set() const { return node_->terms; }
const std::string& Expression::process() const { return node_->process; }
const Term& Expression::subject() const { return node_->subject; }
const std::vector<Expression>& Expression::operands() const { return node_->ops; }

Expression Expression::map_terms(const std::function<Term(const Term&)>& f) const {
  switch (kind()) {
    case ExprKind::Terms: {
      TermSet ts;
      for (const auto& t : term_set()) ts.insert(f(t));
      return terms(std::move(ts));
    }
    case ExprKind::Knowledge: return *this;
    case ExprKind::Channel: return channel(f(subject()));
    case ExprKind::KeyProjection: return key_projection(f(subject()), operands()[0].map_terms(f));
    case ExprKind::Intersect: return intersect(operands()[0].map_terms(f), operands()[1].map_terms(f));
    case ExprKind::Union: return unite(operands()[0].map_terms(f), operands()[1].map_terms(f));
    case ExprKind::Complement: return complement(operands()[0].map_terms(f));
  }
  return *this;
}

void Expression::collect_terms(TermSet& out) const {
  out.insert(term_set().begin(), term_set().end());
  if (subject().valid()) out.insert(subject());
  for (const auto& o : operands()) o.collect_terms(out);
}

std::string Expression::str() const {
  switch (kind()) {
    case ExprKind::Terms: return term_set().size() == 1 ? term_set().begin()->str() : set_str(term_set());
    case ExprKind::Knowledge: return "X[" + process() + "]";
    case ExprKind::Channel: return "M[" + subject().str() + "]";
    case ExprKind::KeyProjection: return "inv(" + subject().str() + ", " + operands()[0].str() + ")";
    case ExprKind::Intersect: return "(" + operands()[0].str() + " & " + operands()[1].str() + ")";
    case ExprKind::Union: return "(" + operands()[0].str() + " | " + operands()[1].str() + ")";
    case ExprKind::Complement: return "not(" + operands()[0].str() + ")";
  }
  return "";
}

namespace {

int compare_expr(const Expression& a, const Expression& b) {
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (int c = compare_sets(a.term_set(), b.term_set()); c != 0) return c;
  if (int c = a.process().compare(b.process()); c != 0) return c < 0 ? -1 : 1;
  if (int c = compare_terms(a.subject(), b.subject()); c != 0) return c;
  const auto &x = a.operands(), &y = b.operands();
  if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (int c = compare_expr(x[i], y[i]); c != 0) return c;
  }
  return 0;
}

int compare_ef(const ElementaryFormula& a, const ElementaryFormula& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (int c = compare_expr(a.lhs, b.lhs); c != 0) return c;
  if (int c = compare_expr(a.rhs, b.rhs); c != 0) return c;
  if (int c = compare_sets(a.subjects, b.subjects); c != 0) return c;
  if (a.scope.kind != b.scope.kind) return a.scope.kind < b.scope.kind ? -1 : 1;
  if (int c = a.scope.process.compare(b.scope.process); c != 0) return c < 0 ? -1 : 1;
  return compare_sets(a.scope.channels, b.scope.channels);
}

}  // namespace

bool operator==(const Expression& a, const Expression& b) { return compare_expr(a, b) == 0; }
bool operator<(const Expression& a, const Expression& b) { return compare_expr(a, b) < 0; }

// ---------------------------------------------------------------------------
// Elementary formulas

std::string Scope::str() const {
  switch (kind) {
    case Kind::Process: return process;
    case Kind::Channels: return "Channels";
    case Kind::ChannelList: return set_str(channels);
  }
  return "";
}

ElementaryFormula ElementaryFormula::eq(Expression a, Expression b) { return {EfKind::Eq, std::move(a), std::move(b), {}, {}}; }
ElementaryFormula ElementaryFormula::sub(Expression a, Expression b) { return {EfKind::Sub, std::move(a), std::move(b), {}, {}}; }
ElementaryFormula ElementaryFormula::sup(Expression a, Expression b) { return {EfKind::Sup, std::move(a), std::move(b), {}, {}}; }

ElementaryFormula ElementaryFormula::fresh(TermSet vars, Scope s) {
  if (vars.empty()) throw ContractViolation("fresh atom without subjects");
  return {EfKind::Fresh, {}, {}, std::move(vars), std::move(s)};
}

ElementaryFormula ElementaryFormula::hidden(TermSet keys, Scope s) {
  if (keys.empty()) throw ContractViolation("hidden atom without keys");
  return {EfKind::Hidden, {}, {}, std::move(keys), std::move(s)};
}

ElementaryFormula ElementaryFormula::map_terms(const std::function<Term(const Term&)>& f) const {
  ElementaryFormula out = *this;
  out.lhs = lhs.map_terms(f);
  out.rhs = rhs.map_terms(f);
  out.subjects.clear();
  for (const auto& t : subjects) out.subjects.insert(f(t));
  out.scope.channels.clear();
  for (const auto& c : scope.channels) out.scope.channels.insert(f(c));
  return out;
}

void ElementaryFormula::collect_terms(TermSet& out) const {
  lhs.collect_terms(out);
  rhs.collect_terms(out);
  out.insert(subjects.begin(), subjects.end());
  out.insert(scope.channels.begin(), scope.channels.end());
}

std::string ElementaryFormula::str() const {
  switch (kind) {
    case EfKind::Eq: return lhs.str() + " = " + rhs.str();
    case EfKind::Sub: return lhs.str() + " <= " + rhs.str();
    case EfKind::Sup: return lhs.str() + " >= " + rhs.str();
    case EfKind::Fresh: return "fresh " + subject_str(subjects) + " " + scope.str();
    case EfKind::Hidden: return "hidden " + subject_str(subjects) + " " + scope.str();
  }
  return "";
}

bool operator==(const ElementaryFormula& a, const ElementaryFormula& b) { return compare_ef(a, b) == 0; }
bool operator<(const ElementaryFormula& a, const ElementaryFormula& b) { return compare_ef(a, b) < 0; }

std::string formula_str(const Formula& f) {
  std::string out = "{";
  for (std::size_t i = 0; i < f.size(); ++i) out += (i ? ", " : "") + f[i].str();
  return out + "}";
}

Formula canonical(Formula f) {
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

// ---------------------------------------------------------------------------
// Evaluation

Binding global_binding(const DistState& s) {
  Binding b;
  for (const auto& st : s.sp) {
    for (const auto& [v, val] : st.binding.entries()) b.bind(v, val);
  }
  return b;
}

Evaluator::Evaluator(const DistProcess& p, const DistState& s) : p_(p), s_(s), theta_(global_binding(s)) {}

const Knowledge& Evaluator::adversary() {
  if (!adversary_) adversary_ = adversary_knowledge(p_, s_);
  return *adversary_;
}

Term Evaluator::value(const Term& t) {
  VarSet vs;
  collect_variables(t, vs);
  for (const auto& v : vs) {
    if (!theta_.binds(v)) throw Undefined("uninitialized variable " + v.str());
  }
  return theta_.apply(t);
}

TermSet Evaluator::eval(const Expression& e) {
  switch (e.kind()) {
    case ExprKind::Terms: {
      TermSet out;
      for (const auto& t : e.term_set()) out.insert(value(t));
      return out;
    }
    case ExprKind::Knowledge: {
      if (e.process() == "P*") return adversary().analyzed();
      std::size_t i = p_.index_of(e.process());
      if (i == npos) throw ContractViolation("unknown process " + e.process());
      TermSet out;
      for (const auto& t : p_.components()[i].init_vars()) {
        if (t.is_constant()) out.insert(t);
      }
      for (const auto& v : s_.sp[i].initialized) {
        if (auto val = s_.sp[i].binding.lookup(v)) out.insert(normalize(*val));
      }
      return out;
    }
    case ExprKind::Channel: return s_.channel(value(e.subject()));
    case ExprKind::KeyProjection: {
      Term key = value(e.subject());
      TermSet out;
      for (const auto& t : eval(e.operands()[0])) key_projection(key, t, out);
      return out;
    }
    case ExprKind::Intersect: {
      TermSet a = eval(e.operands()[0]), b = eval(e.operands()[1]), out;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()), TermLess{});
      return out;
    }
    case ExprKind::Union: {
      TermSet out = eval(e.operands()[0]);
      TermSet b = eval(e.operands()[1]);
      out.insert(b.begin(), b.end());
      return out;
    }
    case ExprKind::Complement:
      throw UnsupportedExpression("complement " + e.str() + " denotes an infinite set");
  }
  return {};
}

TermSet Evaluator::scope_terms(const Scope& s) {
  switch (s.kind) {
    case Scope::Kind::Process: return eval(Expression::knowledge(s.process));
    case Scope::Kind::Channels: {
      TermSet out;
      for (const auto& [c, msgs] : s_.channels) out.insert(msgs.begin(), msgs.end());
      return out;
    }
    case Scope::Kind::ChannelList: {
      TermSet out;
      for (const auto& c : s.channels) {
        const auto& msgs = s_.channel(value(c));
        out.insert(msgs.begin(), msgs.end());
      }
      return out;
    }
  }
  return {};
}

bool Evaluator::holds(const ElementaryFormula& f) {
  try {
    switch (f.kind) {
      case EfKind::Eq: return eval(f.lhs) == eval(f.rhs);
      case EfKind::Sub: {
        TermSet a = eval(f.lhs), b = eval(f.rhs);
        return std::includes(b.begin(), b.end(), a.begin(), a.end(), TermLess{});
      }
      case EfKind::Sup: {
        TermSet a = eval(f.lhs), b = eval(f.rhs);
        return std::includes(a.begin(), a.end(), b.begin(), b.end(), TermLess{});
      }
      case EfKind::Fresh: {
        TermSet scope = scope_terms(f.scope);
        for (const auto& x : f.subjects) {
          Term v = value(x);
          for (const auto& t : scope) {
            if (is_subterm(v, t)) return false;
          }
        }
        return true;
      }
      case EfKind::Hidden: {
        TermSet keys;
        for (const auto& k : f.subjects) keys.insert(value(k));
        for (const auto& t : scope_terms(f.scope)) {
          if (!all_occurrences_hidden(keys, t)) return false;
        }
        return true;
      }
    }
  } catch (const Undefined&) {
    return false;
  }
  return false;
}

bool Evaluator::holds(const Formula& f) {
  return std::all_of(f.begin(), f.end(), [&](const ElementaryFormula& e) { return holds(e); });
}

TermSet eval_expr(const DistProcess& p, const DistState& s, const Expression& e) { return Evaluator(p, s).eval(e); }

bool holds(const DistProcess& p, const DistState& s, const ElementaryFormula& f) { return Evaluator(p, s).holds(f); }

bool holds(const DistProcess& p, const DistState& s, const Formula& f) { return Evaluator(p, s).holds(f); }

// ---------------------------------------------------------------------------
// Entailment

namespace {

bool scope_covers(const Scope& have, const Scope& want) {
  if (have == want) return true;
  if (have.kind == Scope::Kind::Channels && want.kind == Scope::Kind::ChannelList) return true;
  if (have.kind == Scope::Kind::ChannelList && want.kind == Scope::Kind::ChannelList) {
    return std::includes(have.channels.begin(), have.channels.end(), want.channels.begin(), want.channels.end(),
                         TermLess{});
  }
  return false;
}

}  // namespace

// Lower rank wins as class representative: constants, atom variables,
// compounds over those, then anything else.
bool Congruence::better(const Term& a, const Term& b) const {
  auto rank = [this](const Term& t) {
    int r;
    if (t.is_constant()) {
      r = 0;
    } else if (t.is_variable()) {
      r = atoms_.contains(t) ? 1 : 3;
    } else {
      VarSet vs = variables_of(t);
      r = std::all_of(vs.begin(), vs.end(), [this](const Term& v) { return atoms_.contains(v); }) ? 2 : 4;
    }
    return std::make_tuple(r, t.size());
  };
  auto ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  return compare_terms(a, b) < 0;
}

Congruence::Congruence(const Formula& premises, VarSet atoms) : premises_(premises), atoms_(std::move(atoms)) {
  for (const auto& f : premises_) {
    TermSet ts;
    f.collect_terms(ts);
    for (const auto& t : ts) add_term(t);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& f : premises_) {
      if (f.kind == EfKind::Eq && f.lhs.kind() == ExprKind::Terms && f.rhs.kind() == ExprKind::Terms &&
          f.lhs.term_set().size() == 1 && f.rhs.term_set().size() == 1) {
        unite(*f.lhs.term_set().begin(), *f.rhs.term_set().begin());
      }
    }
    close();
    expr_parent_.clear();
    expr_of_.clear();
    canon_premises_.clear();
    for (const auto& f : premises_) {
      auto cf = f.map_terms([this](const Term& t) { return canon(t); });
      canon_premises_.push_back(cf);
      if (cf.kind == EfKind::Eq) unite_expr(expr_key(cf.lhs), expr_key(cf.rhs));
    }
    // two singletons in one class are equal terms
    std::map<std::string, Term> singleton_of;
    for (const auto& [key, e] : expr_of_) {
      if (e.kind() != ExprKind::Terms || e.term_set().size() != 1) continue;
      const Term& t = *e.term_set().begin();
      auto [it, fresh] = singleton_of.emplace(find_expr(key), t);
      if (!fresh && !(find(it->second) == find(t))) {
        unite(it->second, t);
        changed = true;
      }
    }
  }
}

void Congruence::add_term(const Term& t) {
  if (parent_.contains(t)) return;
  parent_.emplace(t, t);
  if (t.is_app()) {
    for (const auto& a : t.args()) add_term(a);
  }
  Term n = normalize(t);
  if (!(n == t)) {
    add_term(n);
    unite(t, n);
  }
}

Term Congruence::find(const Term& t) {
  auto it = parent_.find(t);
  if (it == parent_.end()) return t;
  if (it->second == t) return t;
  Term root = find(it->second);
  parent_[t] = root;
  return root;
}

void Congruence::unite(const Term& a, const Term& b) {
  add_term(a);
  add_term(b);
  Term ra = find(a), rb = find(b);
  if (ra == rb) return;
  if (better(ra, rb)) {
    parent_[rb] = ra;
  } else {
    parent_[ra] = rb;
  }
}

void Congruence::close() {
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::pair<FunSym, std::vector<Term>>, Term,
             decltype([](const auto& x, const auto& y) {
               if (x.first != y.first) return x.first < y.first;
               return std::lexicographical_compare(x.second.begin(), x.second.end(), y.second.begin(),
                                                   y.second.end(), TermLess{});
             })>
        sigs;
    std::vector<Term> apps;
    for (const auto& [t, p] : parent_) {
      if (t.is_app()) apps.push_back(t);
    }
    for (const auto& t : apps) {
      std::vector<Term> reps;
      for (const auto& a : t.args()) reps.push_back(find(a));
      auto key = std::make_pair(t.fun(), reps);
      auto [it, fresh] = sigs.emplace(key, t);
      if (!fresh && !(find(it->second) == find(t))) {
        unite(it->second, t);
        changed = true;
      }
      // an application whose canonical form normalizes differently
      try {
        Term rebuilt = normalize(Term::app(t.fun(), reps));
        if (!(rebuilt == t) && !(find(rebuilt) == find(t))) {
          if (rebuilt.size() <= t.size() || parent_.contains(rebuilt)) {
            unite(rebuilt, t);
            changed = true;
          }
        }
      } catch (const TypeError&) {
      }
    }
  }
}

Term Congruence::canon(const Term& t) {
  Term n = normalize(t);
  if (parent_.contains(n)) return find(n);
  if (!n.is_app()) return n;
  std::vector<Term> args;
  for (const auto& a : n.args()) args.push_back(canon(a));
  try {
    Term rebuilt = normalize(Term::app(n.fun(), std::move(args)));
    if (parent_.contains(rebuilt)) return find(rebuilt);
    return rebuilt;
  } catch (const TypeError&) {
    return n;
  }
}

Expression Congruence::canon(const Expression& e) {
  return e.map_terms([this](const Term& t) { return canon(t); });
}

std::string Congruence::expr_key(const Expression& e) {
  std::string k = e.str();
  if (!expr_parent_.contains(k)) {
    expr_parent_.emplace(k, k);
    expr_of_.emplace(k, e);
  }
  return k;
}

std::string Congruence::find_expr(const std::string& k) {
  auto it = expr_parent_.find(k);
  if (it == expr_parent_.end() || it->second == k) return k;
  std::string root = find_expr(it->second);
  expr_parent_[k] = root;
  return root;
}

void Congruence::unite_expr(const std::string& a, const std::string& b) {
  std::string ra = find_expr(a), rb = find_expr(b);
  if (ra == rb) return;
  if (ra < rb) {
    expr_parent_[rb] = ra;
  } else {
    expr_parent_[ra] = rb;
  }
}

std::vector<TermSet> Congruence::known_values(const Expression& e) {
  std::vector<TermSet> out;
  Expression ce = canon(e);
  if (ce.kind() == ExprKind::Terms) out.push_back(ce.term_set());
  std::string root = find_expr(expr_key(ce));
  for (const auto& [key, ex] : expr_of_) {
    if (ex.kind() != ExprKind::Terms || find_expr(key) != root) continue;
    if (std::find(out.begin(), out.end(), ex.term_set()) == out.end()) out.push_back(ex.term_set());
  }
  return out;
}

bool Congruence::entails(const ElementaryFormula& f) {
  ElementaryFormula cf = f.map_terms([this](const Term& t) { return canon(t); });
  if (std::find(canon_premises_.begin(), canon_premises_.end(), cf) != canon_premises_.end()) return true;
  auto subset = [this](const Expression& a, const Expression& b) {
    if (a.kind() == ExprKind::Terms && a.term_set().empty()) return true;
    std::string ka = find_expr(expr_key(a)), kb = find_expr(expr_key(b));
    if (ka == kb) return true;
    for (const auto& p : canon_premises_) {
      if (p.kind == EfKind::Eq || p.kind == EfKind::Sub) {
        if (find_expr(expr_key(p.lhs)) == ka && find_expr(expr_key(p.rhs)) == kb) return true;
        if (p.kind == EfKind::Eq && find_expr(expr_key(p.rhs)) == ka && find_expr(expr_key(p.lhs)) == kb) return true;
      }
      if (p.kind == EfKind::Sup && find_expr(expr_key(p.rhs)) == ka && find_expr(expr_key(p.lhs)) == kb) return true;
    }
    for (const auto& va : known_values(a)) {
      for (const auto& vb : known_values(b)) {
        if (std::includes(vb.begin(), vb.end(), va.begin(), va.end(), TermLess{})) return true;
      }
    }
    return false;
  };
  switch (cf.kind) {
    case EfKind::Eq:
      return find_expr(expr_key(cf.lhs)) == find_expr(expr_key(cf.rhs)) ||
             (subset(cf.lhs, cf.rhs) && subset(cf.rhs, cf.lhs));
    case EfKind::Sub: return subset(cf.lhs, cf.rhs);
    case EfKind::Sup: return subset(cf.rhs, cf.lhs);
    case EfKind::Fresh:
      for (const auto& x : cf.subjects) {
        bool found = false;
        for (const auto& p : canon_premises_) {
          if (p.kind == EfKind::Fresh && p.subjects.contains(x) && scope_covers(p.scope, cf.scope)) {
            found = true;
            break;
          }
        }
        if (!found) return false;
      }
      return true;
    case EfKind::Hidden:
      for (const auto& p : canon_premises_) {
        if (p.kind == EfKind::Hidden && p.subjects == cf.subjects && scope_covers(p.scope, cf.scope)) return true;
      }
      return false;
  }
  return false;
}

bool implies(const Formula& premises, const ElementaryFormula& conclusion) {
  return Congruence(premises).entails(conclusion);
}

bool implies(const Formula& premises, const Formula& conclusion) {
  Congruence c(premises);
  return std::all_of(conclusion.begin(), conclusion.end(), [&](const ElementaryFormula& f) { return c.entails(f); });
}

}  // namespace procverify
