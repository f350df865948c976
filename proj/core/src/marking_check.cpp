#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "procverify/marking.hpp"

namespace procverify {

namespace {

enum class Tri : std::uint8_t { Yes, No, Unknown };

struct Fact {
  ElementaryFormula ef;
  std::string rule;
};

// Per-process static information shared by all obligations.
struct Analysis {
  explicit Analysis(const DistProcess& proc);

  const DistProcess& p;
  VarSet atoms;                                  // initial variables: distinct fresh values
  std::vector<std::vector<VarSet>> init;         // variables initialized on every path to a node
  std::vector<std::vector<std::set<std::size_t>>> sends_before;  // send edges on some path to a node
};

Analysis::Analysis(const DistProcess& proc) : p(proc) {
  for (const auto& c : p.components()) {
    for (const auto& x : c.init_vars()) {
      if (x.is_variable()) atoms.insert(x);
    }
  }
  for (const auto& c : p.components()) {
    std::vector<std::optional<VarSet>> in(c.node_count());
    VarSet root;
    for (const auto& x : c.init_vars()) {
      if (x.is_variable()) root.insert(x);
    }
    in[0] = root;
    std::vector<std::set<std::size_t>> sends(c.node_count());
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t k = 0; k < c.edges().size(); ++k) {
        const Edge& e = c.edges()[k];
        if (in[e.from]) {
          VarSet out = *in[e.from];
          if (e.action.kind == ActionKind::Receive) collect_variables(e.action.second, out);
          if (e.action.kind == ActionKind::Assign) collect_variables(e.action.first, out);
          VarSet next;
          if (!in[e.to]) {
            next = out;
          } else {
            std::set_intersection(in[e.to]->begin(), in[e.to]->end(), out.begin(), out.end(),
                                  std::inserter(next, next.end()), TermLess{});
          }
          if (e.to != 0 && (!in[e.to] || next != *in[e.to])) {
            in[e.to] = std::move(next);
            changed = true;
          }
        }
        std::set<std::size_t> s = sends[e.from];
        if (e.action.kind == ActionKind::Send) s.insert(k);
        for (auto x : s) {
          if (sends[e.to].insert(x).second) changed = true;
        }
      }
    }
    std::vector<VarSet> flat;
    for (auto& v : in) flat.push_back(v ? *v : VarSet{});
    init.push_back(std::move(flat));
    sends_before.push_back(std::move(sends));
  }
}

Term map_vars(const Term& t, const std::function<Term(const Term&)>& f) {
  if (t.is_variable()) return f(t);
  if (!t.is_app()) return t;
  std::vector<Term> args;
  for (const auto& a : t.args()) args.push_back(map_vars(a, f));
  return Term::app(t.fun(), std::move(args));
}

bool constructor(const Term& t) { return t.is_app() && !t.is(Fun::Decrypt) && !t.is(Fun::Proj); }

bool type_fits(const Term& value, const Term& var) {
  Type want = var.type(), have = value.type();
  return have == want || want.kind == TypeKind::Message || have.kind == TypeKind::Message;
}

bool has_destructor(const Term& t) {
  if (!t.is_app()) return false;
  if (!constructor(t)) return true;
  return std::any_of(t.args().begin(), t.args().end(), [](const Term& a) { return has_destructor(a); });
}

// Symbolic reasoning at one node: equalities from β plus the fact that
// initial variables hold pairwise distinct fresh values.
class Context {
 public:
  Context(const Analysis& a, const Formula& beta) : a_(a), beta_(beta), c_(beta, a.atoms) {
    for (const auto& f : beta) cbeta_.push_back(f.map_terms([this](const Term& t) { return c_.canon(t); }));
  }

  const Analysis& analysis() const { return a_; }
  const Formula& beta() const { return beta_; }
  const Formula& cbeta() const { return cbeta_; }
  Term canon(const Term& t) { return c_.canon(t); }
  Expression canon(const Expression& e) { return c_.canon(e); }
  bool entails(const ElementaryFormula& f) { return c_.entails(f); }

  bool resolved(const Term& t) const {
    VarSet vs = variables_of(t);
    return std::all_of(vs.begin(), vs.end(), [this](const Term& v) { return a_.atoms.contains(v); });
  }
  bool atom(const Term& t) const { return t.is_variable() && a_.atoms.contains(t); }

  // Both arguments canonical.
  Tri eq(const Term& x, const Term& y) {
    if (x == y) return Tri::Yes;
    if (resolved(x) && resolved(y)) return Tri::No;
    bool xa = constructor(x), ya = constructor(y);
    if (xa && ya) {
      if (x.fun() != y.fun()) return Tri::No;
      Tri r = Tri::Yes;
      for (std::size_t j = 0; j < x.args().size(); ++j) {
        Tri t = eq(x.arg(j), y.arg(j));
        if (t == Tri::No) return Tri::No;
        if (t == Tri::Unknown) r = Tri::Unknown;
      }
      return r;
    }
    auto opaque = [this](const Term& t) { return t.is_constant() || atom(t); };
    if ((xa && opaque(y)) || (ya && opaque(x))) return Tri::No;
    return Tri::Unknown;
  }

  bool secret_channel(const Term& ch) {
    if (!atom(ch)) return false;
    return entails(ElementaryFormula::fresh({ch}, Scope::of_process("P*")));
  }

  // Bodies of k-encryptions inside m, or nullopt when undecidable.
  std::optional<TermSet> projection(const Term& k, const Term& m) {
    TermSet out;
    bool ok = true;
    std::function<void(const Term&)> walk = [&](const Term& t) {
      if (!ok) return;
      if (t.is_variable()) {
        if (!atom(t)) ok = false;
        return;
      }
      if (!t.is_app()) return;
      if (t.is(Fun::Encrypt)) {
        Tri r = eq(t.arg(0), k);
        if (r == Tri::Unknown) {
          ok = false;
          return;
        }
        if (r == Tri::Yes) out.insert(t.arg(1));
      } else if (!constructor(t)) {
        ok = false;
        return;
      }
      for (const auto& a : t.args()) walk(a);
    };
    walk(m);
    if (!ok) return std::nullopt;
    return out;
  }

  Tri in_group(const TermSet& keys, const Term& t) {
    Tri r = Tri::No;
    for (const auto& k : keys) {
      Tri e = eq(t, k);
      if (e == Tri::Yes) return Tri::Yes;
      if (e == Tri::Unknown) r = Tri::Unknown;
    }
    return r;
  }

  // Every occurrence of a group key in t is hidden.
  Tri hidden(const TermSet& keys, const Term& t, bool protected_ = false) {
    if (!protected_) {
      Tri g = in_group(keys, t);
      if (g == Tri::Yes) return Tri::No;
      if (g == Tri::Unknown) return Tri::Unknown;
    }
    if (t.is_variable()) return (protected_ || atom(t)) ? Tri::Yes : Tri::Unknown;
    if (!t.is_app()) return Tri::Yes;
    if (!constructor(t) && !protected_) return Tri::Unknown;
    Tri r = Tri::Yes;
    auto merge = [&r](Tri x) {
      if (x == Tri::No) r = Tri::No;
      if (x == Tri::Unknown && r == Tri::Yes) r = Tri::Unknown;
    };
    if (t.is(Fun::Encrypt)) {
      Tri g = in_group(keys, t.arg(0));
      if (g != Tri::Yes) merge(hidden(keys, t.arg(0), protected_));
      merge(hidden(keys, t.arg(1), protected_ || g == Tri::Yes));
      return r;
    }
    for (const auto& a : t.args()) merge(hidden(keys, a, protected_));
    return r;
  }

  // z is not a subterm of t.
  Tri free_of(const Term& z, const Term& t) {
    Tri e = eq(t, z);
    if (e == Tri::Yes) return Tri::No;
    if (t.is_variable()) return atom(t) ? Tri::Yes : Tri::Unknown;
    if (!t.is_app()) return Tri::Yes;
    if (!constructor(t)) return Tri::Unknown;
    Tri r = Tri::Yes;
    for (const auto& a : t.args()) {
      Tri x = free_of(z, a);
      if (x == Tri::No) return Tri::No;
      if (x == Tri::Unknown) r = Tri::Unknown;
    }
    return r;
  }

  // Term sets known to equal or contain e.
  std::vector<TermSet> upper_bounds(const Expression& e) {
    Expression ce = canon(e);
    std::vector<TermSet> out;
    for (auto& ts : c_.known_values(ce)) {
      if (ce.kind() != ExprKind::Terms) out.push_back(std::move(ts));
    }
    for (const auto& f : cbeta_) {
      if (f.kind == EfKind::Sub && f.lhs == ce && f.rhs.kind() == ExprKind::Terms) out.push_back(f.rhs.term_set());
      if (f.kind == EfKind::Sup && f.rhs == ce && f.lhs.kind() == ExprKind::Terms) out.push_back(f.lhs.term_set());
    }
    return out;
  }

  // One-way symbolic matching of pattern p (new variables free) against a
  // canonical candidate.
  Tri match(const Term& p, const Term& cand, const VarSet& fresh, std::map<Term, Term, TermLess>& b) {
    if (p.is_variable() && fresh.contains(p)) {
      auto it = b.find(p);
      if (it != b.end()) return eq(it->second, cand);
      if (!type_fits(cand, p)) return Tri::No;
      b.emplace(p, cand);
      return Tri::Yes;
    }
    VarSet pv = variables_of(p);
    bool closed = std::none_of(pv.begin(), pv.end(), [&](const Term& v) { return fresh.contains(v); });
    if (closed) return eq(canon(p), cand);
    if (has_destructor(p)) return Tri::Unknown;
    if (constructor(cand)) {
      if (cand.fun() != p.fun()) return Tri::No;
      Tri r = Tri::Yes;
      for (std::size_t j = 0; j < p.args().size(); ++j) {
        Tri t = match(p.arg(j), cand.arg(j), fresh, b);
        if (t == Tri::No) return Tri::No;
        if (t == Tri::Unknown) r = Tri::Unknown;
      }
      return r;
    }
    if (cand.is_constant() || atom(cand)) return Tri::No;
    return Tri::Unknown;
  }

 private:
  const Analysis& a_;
  Formula beta_;
  Congruence c_;
  Formula cbeta_;
};

bool terms_only(const Expression& e) {
  switch (e.kind()) {
    case ExprKind::Terms: return true;
    case ExprKind::Intersect:
    case ExprKind::Union:
    case ExprKind::Complement:
      return std::all_of(e.operands().begin(), e.operands().end(), terms_only);
    default: return false;
  }
}

bool set_relation(const ElementaryFormula& f) {
  return f.kind == EfKind::Eq || f.kind == EfKind::Sub || f.kind == EfKind::Sup;
}

// Only grows along any run.
bool monotone(const Expression& e) {
  switch (e.kind()) {
    case ExprKind::Terms:
    case ExprKind::Channel: return true;
    case ExprKind::Knowledge: return e.process() == "P*";
    case ExprKind::KeyProjection: return monotone(e.operands()[0]);
    case ExprKind::Union:
    case ExprKind::Intersect: return monotone(e.operands()[0]) && monotone(e.operands()[1]);
    case ExprKind::Complement: return false;
  }
  return false;
}

// E ⊆ growing set, stated either way round.
bool growing_lower_bound(const ElementaryFormula& f) {
  if (f.kind == EfKind::Sup) return monotone(f.lhs) && terms_only(f.rhs);
  if (f.kind == EfKind::Sub) return terms_only(f.lhs) && monotone(f.rhs);
  return false;
}

template <class Pred>
bool all_leaves(const Expression& e, Pred pred) {
  switch (e.kind()) {
    case ExprKind::Union:
    case ExprKind::Intersect:
    case ExprKind::Complement:
      return std::all_of(e.operands().begin(), e.operands().end(),
                         [&](const Expression& x) { return all_leaves(x, pred); });
    case ExprKind::KeyProjection: return pred(e) && all_leaves(e.operands()[0], pred);
    default: return pred(e);
  }
}

struct ChannelSide {
  Expression side;  // Channel or KeyProjection of a Channel
  TermSet bound;
  EfKind kind;
};

// `M_c = E`, `M_c ⊆ E`, and the same for key projections, normalized to
// the channel expression on the left.
std::optional<ChannelSide> channel_fact(const ElementaryFormula& f) {
  auto channelish = [](const Expression& e) {
    return e.kind() == ExprKind::Channel ||
           (e.kind() == ExprKind::KeyProjection && e.operands()[0].kind() == ExprKind::Channel);
  };
  if ((f.kind == EfKind::Eq || f.kind == EfKind::Sub) && channelish(f.lhs) && f.rhs.kind() == ExprKind::Terms) {
    return ChannelSide{f.lhs, f.rhs.term_set(), f.kind};
  }
  if (f.kind == EfKind::Eq && channelish(f.rhs) && f.lhs.kind() == ExprKind::Terms) {
    return ChannelSide{f.rhs, f.lhs.term_set(), f.kind};
  }
  if (f.kind == EfKind::Sup && channelish(f.rhs) && f.lhs.kind() == ExprKind::Terms) {
    return ChannelSide{f.rhs, f.lhs.term_set(), EfKind::Sub};
  }
  return std::nullopt;
}

const Term& channel_of(const Expression& side) {
  return side.kind() == ExprKind::Channel ? side.subject() : side.operands()[0].subject();
}

ElementaryFormula rebuild(const ChannelSide& cs, TermSet bound) {
  return cs.kind == EfKind::Eq ? ElementaryFormula::eq(cs.side, Expression::terms(std::move(bound)))
                               : ElementaryFormula::sub(cs.side, Expression::terms(std::move(bound)));
}

struct Post {
  bool unrealizable = false;
  std::string prune_rule;
  std::vector<Fact> facts;
};

std::string scope_process(const Scope& s) { return s.kind == Scope::Kind::Process ? s.process : std::string(); }

// ---------------------------------------------------------------------------
// Honest sends

void send_post(Context& cx, std::size_t actor, const Action& a, Post& out) {
  (void)actor;
  Term ch = cx.canon(a.first);
  Term m = cx.canon(a.second);
  bool secret = cx.secret_channel(ch);
  auto distinct = [&](const Term& d) { return cx.eq(d, ch) == Tri::No; };

  for (std::size_t idx = 0; idx < cx.beta().size(); ++idx) {
    const ElementaryFormula& orig = cx.beta()[idx];
    const ElementaryFormula& f = cx.cbeta()[idx];
    if (set_relation(f)) {
      if (terms_only(f.lhs) && terms_only(f.rhs)) {
        out.facts.push_back({orig, "R6"});
        continue;
      }
      auto unaffected = [&](const Expression& e) {
        switch (e.kind()) {
          case ExprKind::Channel: return distinct(e.subject());
          case ExprKind::Knowledge: return e.process() != "P*" || secret;
          default: return true;
        }
      };
      if (all_leaves(f.lhs, unaffected) && all_leaves(f.rhs, unaffected)) {
        out.facts.push_back({orig, "R2"});
        continue;
      }
      if (growing_lower_bound(f)) {
        out.facts.push_back({orig, "R4"});
        continue;
      }
      auto cs = channel_fact(f);
      if (!cs || cx.eq(channel_of(cs->side), ch) != Tri::Yes) continue;
      TermSet bound = cs->bound;
      if (cs->side.kind() == ExprKind::Channel) {
        bound.insert(m);
      } else {
        auto proj = cx.projection(cx.canon(cs->side.subject()), m);
        if (!proj) continue;
        bound.insert(proj->begin(), proj->end());
      }
      out.facts.push_back({rebuild(*cs, std::move(bound)), "R4"});
      continue;
    }

    const Scope& sc = f.scope;
    bool adversary = sc.adversary();
    bool honest = sc.kind == Scope::Kind::Process && !adversary;
    bool list_clear = sc.kind == Scope::Kind::ChannelList &&
                      std::all_of(sc.channels.begin(), sc.channels.end(), [&](const Term& d) { return distinct(d); });
    if (honest || list_clear || (adversary && secret)) {
      out.facts.push_back({orig, "R1"});
      continue;
    }

    if (f.kind == EfKind::Fresh) {
      TermSet keep;
      for (const auto& z0 : orig.subjects) {
        Term z = cx.canon(z0);
        if (!cx.atom(z) || cx.free_of(z, m) != Tri::Yes) continue;
        if (adversary && !cx.entails(ElementaryFormula::fresh({z}, Scope::all_channels()))) continue;
        keep.insert(z0);
      }
      if (!keep.empty()) out.facts.push_back({ElementaryFormula::fresh(std::move(keep), sc), "R1"});
    } else {
      bool atoms = std::all_of(f.subjects.begin(), f.subjects.end(), [&](const Term& k) { return cx.atom(k); });
      if (!atoms || cx.hidden(f.subjects, m) != Tri::Yes) continue;
      if (adversary && !cx.entails(ElementaryFormula::hidden(f.subjects, Scope::all_channels()))) continue;
      out.facts.push_back({orig, "R1"});
    }
  }
}

// ---------------------------------------------------------------------------
// Receives and assignments

using Bindings = std::map<Term, Term, TermLess>;

// Facts common to every possible binding, or nullopt if nothing is known.
struct MatchResult {
  bool none = false;  // no candidate can match
  std::optional<Bindings> common;
};

MatchResult match_candidates(Context& cx, const Term& pattern, const TermSet& cands, const VarSet& fresh) {
  MatchResult r;
  std::vector<Bindings> yes;
  for (const auto& c : cands) {
    Bindings b;
    Tri t = cx.match(pattern, c, fresh, b);
    if (t == Tri::Unknown) return r;
    if (t == Tri::Yes) yes.push_back(std::move(b));
  }
  if (yes.empty()) {
    r.none = true;
    return r;
  }
  Bindings common = yes.front();
  for (std::size_t j = 1; j < yes.size(); ++j) {
    for (auto it = common.begin(); it != common.end();) {
      auto other = yes[j].find(it->first);
      if (other == yes[j].end() || !(other->second == it->second)) {
        it = common.erase(it);
      } else {
        ++it;
      }
    }
  }
  r.common = std::move(common);
  return r;
}

// Pattern positions of fresh variables are outside group encryptions and key
// positions.
bool exposed_positions(Context& cx, const TermSet& keys, const Term& p, const VarSet& fresh, bool guarded = false) {
  if (p.is_variable()) return !fresh.contains(p) || !guarded;
  if (!p.is_app()) return true;
  if (p.is(Fun::Encrypt)) {
    bool g = guarded || cx.in_group(keys, cx.canon(p.arg(0))) != Tri::No;
    return exposed_positions(cx, keys, p.arg(0), fresh, true) && exposed_positions(cx, keys, p.arg(1), fresh, g);
  }
  return std::all_of(p.args().begin(), p.args().end(),
                     [&](const Term& a) { return exposed_positions(cx, keys, a, fresh, guarded); });
}

void binding_post(Context& cx, std::size_t actor, const Edge& edge, const TgNode& from, Post& out) {
  const Analysis& an = cx.analysis();
  const std::string& me = an.p.components()[actor].name();
  const Action& a = edge.action;
  const VarSet& frozen = an.init[actor][from[actor]];
  const Term& raw = a.kind == ActionKind::Receive ? a.second : a.first;
  VarSet fresh;
  for (const auto& v : variables_of(raw)) {
    if (!frozen.contains(v)) fresh.insert(v);
  }
  Term pattern = map_vars(raw, [&](const Term& v) { return frozen.contains(v) ? cx.canon(v) : v; });

  // Determined values of the fresh variables.
  Bindings known;
  bool any_unknown = false;
  auto absorb = [&](const MatchResult& r, const char* rule) {
    if (r.none) {
      out.unrealizable = true;
      if (out.prune_rule.empty()) out.prune_rule = rule;
      return;
    }
    if (!r.common) {
      any_unknown = true;
      return;
    }
    for (const auto& [v, val] : *r.common) known.emplace(v, val);
  };

  std::optional<Term> ch;
  if (a.kind == ActionKind::Receive) {
    ch = cx.canon(a.first);
    for (const auto& bound : cx.upper_bounds(Expression::channel(*ch))) {
      absorb(match_candidates(cx, pattern, bound, fresh), "D1");
    }
    if (pattern.is(Fun::Encrypt)) {
      VarSet kv = variables_of(pattern.arg(0));
      if (std::none_of(kv.begin(), kv.end(), [&](const Term& v) { return fresh.contains(v); })) {
        Term k = cx.canon(pattern.arg(0));
        for (const auto& bound : cx.upper_bounds(Expression::key_projection(k, Expression::channel(*ch)))) {
          absorb(match_candidates(cx, pattern.arg(1), bound, fresh), "D2");
        }
      }
    }
  } else {
    Term value = cx.canon(a.second);
    absorb(match_candidates(cx, pattern, TermSet{value}, fresh), "R5");
    if (out.unrealizable) out.prune_rule.clear();
  }

  bool determined = !any_unknown && std::all_of(fresh.begin(), fresh.end(), [&](const Term& v) {
    return known.contains(v);
  });
  auto values_resolved = [&] {
    return determined && std::all_of(known.begin(), known.end(), [&](const auto& kv) { return cx.resolved(kv.second); });
  };

  for (std::size_t idx = 0; idx < cx.beta().size(); ++idx) {
    const ElementaryFormula& orig = cx.beta()[idx];
    const ElementaryFormula& f = cx.cbeta()[idx];
    if (set_relation(f)) {
      if (terms_only(f.lhs) && terms_only(f.rhs)) {
        out.facts.push_back({orig, "R6"});
        continue;
      }
      auto unaffected = [&](const Expression& e) { return e.kind() != ExprKind::Knowledge || e.process() != me; };
      if (all_leaves(f.lhs, unaffected) && all_leaves(f.rhs, unaffected)) out.facts.push_back({orig, "R2"});
      continue;
    }
    if (scope_process(f.scope) != me) {
      out.facts.push_back({orig, "R1"});
      continue;
    }
    if (f.kind == EfKind::Fresh) {
      TermSet keep;
      for (const auto& z0 : orig.subjects) {
        Term z = cx.canon(z0);
        if (!cx.atom(z)) continue;
        bool ok = false;
        if (a.kind == ActionKind::Assign) {
          ok = true;  // new values are built from what the process already holds
        } else if (cx.entails(ElementaryFormula::fresh({z}, Scope::all_channels())) ||
                   cx.entails(ElementaryFormula::fresh({z}, Scope::channel_list({*ch})))) {
          ok = true;
        } else if (values_resolved()) {
          ok = std::all_of(known.begin(), known.end(),
                           [&](const auto& kv) { return cx.free_of(z, kv.second) == Tri::Yes; });
        }
        if (ok) keep.insert(z0);
      }
      if (!keep.empty()) out.facts.push_back({ElementaryFormula::fresh(std::move(keep), orig.scope), "R1"});
    } else {
      bool ok = false;
      if (determined && std::all_of(known.begin(), known.end(), [&](const auto& kv) {
            return cx.hidden(f.subjects, kv.second) == Tri::Yes;
          })) {
        ok = true;
      } else if (a.kind == ActionKind::Receive && exposed_positions(cx, f.subjects, raw, fresh) &&
                 (cx.entails(ElementaryFormula::hidden(f.subjects, Scope::all_channels())) ||
                  cx.entails(ElementaryFormula::hidden(f.subjects, Scope::channel_list({*ch}))))) {
        ok = true;
      }
      if (ok) out.facts.push_back({orig, "R1"});
    }
  }
  for (const auto& [v, val] : known) out.facts.push_back({ElementaryFormula::term_eq(v, val), "R5"});
}

Post transfer(const Analysis& an, const Formula& beta, const TgEdge& e) {
  Context cx(an, beta);
  Post out;
  const Edge& edge = an.p.components()[e.actor].edges()[e.edge];
  if (edge.action.kind == ActionKind::Send) {
    send_post(cx, e.actor, edge.action, out);
  } else {
    binding_post(cx, e.actor, edge, e.from, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adversary steps

// Rule preserving f under adversary sends at node v, empty if none applies.
std::string adversary_rule(Context& cx, const TgNode& v, const ElementaryFormula& f) {
  const Analysis& an = cx.analysis();
  if (set_relation(f)) {
    if (terms_only(f.lhs) && terms_only(f.rhs)) return "R6";
    auto stable = [&](const Expression& e) {
      switch (e.kind()) {
        case ExprKind::Channel: return cx.secret_channel(e.subject());
        case ExprKind::Knowledge: return e.process() != "P*";
        default: return true;
      }
    };
    if (all_leaves(f.lhs, stable) && all_leaves(f.rhs, stable)) return "R2";
    if (growing_lower_bound(f)) return "R2";
    auto cs = channel_fact(f);
    if (!cs || cs->side.kind() != ExprKind::KeyProjection) return "";
    Term k = cs->side.subject();
    bool guarded = std::any_of(cx.cbeta().begin(), cx.cbeta().end(), [&](const ElementaryFormula& g) {
      return g.kind == EfKind::Hidden && g.scope.adversary() && g.subjects.contains(k) &&
             std::all_of(g.subjects.begin(), g.subjects.end(), [&](const Term& x) { return cx.atom(x); });
    });
    if (!guarded) return "";
    for (std::size_t j = 0; j < an.p.components().size(); ++j) {
      const auto& edges = an.p.components()[j].edges();
      for (auto idx : an.sends_before[j][v[j]]) {
        auto proj = cx.projection(k, cx.canon(edges[idx].action.second));
        if (!proj) return "";
        for (const auto& t : *proj) {
          if (!cs->bound.contains(t)) return "";
        }
      }
    }
    return "R3";
  }
  const Scope& sc = f.scope;
  bool atoms = std::all_of(f.subjects.begin(), f.subjects.end(), [&](const Term& x) { return cx.atom(x); });
  if (sc.kind == Scope::Kind::Process && !sc.adversary()) return "R1";
  if (sc.adversary()) return atoms ? "R1" : "";
  if (!atoms) return "";
  if (f.kind == EfKind::Fresh) {
    return cx.entails(ElementaryFormula::fresh(f.subjects, Scope::of_process("P*"))) ? "R1" : "";
  }
  return cx.entails(ElementaryFormula::hidden(f.subjects, Scope::of_process("P*"))) ? "R1" : "";
}

// ---------------------------------------------------------------------------
// Discharge

std::string discharge(const Analysis& an, const std::vector<Fact>& facts, const ElementaryFormula& goal) {
  Formula all;
  for (const auto& f : facts) all.push_back(f.ef);
  Congruence c(all, an.atoms);
  if (!c.entails(goal)) return "";
  auto cgoal = goal.map_terms([&](const Term& t) { return c.canon(t); });
  for (const auto& f : facts) {
    if (f.ef.map_terms([&](const Term& t) { return c.canon(t); }) == cgoal) return f.rule;
  }
  Formula eqs;
  std::set<std::string> rules;
  for (const auto& f : facts) {
    if (f.ef.kind == EfKind::Eq && terms_only(f.ef.lhs) && terms_only(f.ef.rhs)) {
      eqs.push_back(f.ef);
      rules.insert(f.rule);
    }
  }
  for (const auto& f : facts) {
    Formula one = eqs;
    one.push_back(f.ef);
    if (Congruence(one, an.atoms).entails(goal)) {
      if (f.rule == "R6" || rules.empty() || (rules.size() == 1 && rules.contains(f.rule))) return f.rule;
      return f.rule + "+R6";
    }
  }
  std::string joined;
  for (const auto& f : facts) {
    if (joined.find(f.rule) == std::string::npos) joined += (joined.empty() ? "" : "+") + f.rule;
  }
  return joined;
}

bool valid_node(const DistProcess& p, const TgNode& v) {
  if (v.size() != p.components().size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= p.components()[i].node_count()) return false;
  }
  return true;
}

void check_processes(const DistProcess& p, const TgNode& v, const Formula& beta, std::vector<std::string>& problems) {
  std::function<void(const Expression&)> walk = [&](const Expression& e) {
    if (e.kind() == ExprKind::Knowledge && e.process() != "P*" && p.index_of(e.process()) == npos) {
      problems.push_back(node_label(p, v) + ": unknown process " + e.process());
    }
    for (const auto& o : e.operands()) walk(o);
  };
  for (const auto& f : beta) {
    if (set_relation(f)) {
      walk(f.lhs);
      walk(f.rhs);
    } else if (f.scope.kind == Scope::Kind::Process && !f.scope.adversary() && p.index_of(f.scope.process) == npos) {
      problems.push_back(node_label(p, v) + ": unknown process " + f.scope.process);
    }
  }
}

}  // namespace

VerificationReport check_marking(const DistProcess& p, const Marking& m) {
  VerificationReport r;
  TgNode start = initial_node(p);
  for (const auto& [v, beta] : m.formulas) {
    if (!valid_node(p, v)) {
      r.problems.push_back("marked node does not exist");
      continue;
    }
    check_processes(p, v, beta, r.problems);
  }
  if (!m.contains(start)) r.problems.push_back("initial node " + node_label(p, start) + " is not marked");
  if (!r.problems.empty()) return r;

  std::set<TgNode> has_pred{start};
  for (const auto& [v, beta] : m.formulas) {
    for (const auto& e : tg_out_edges(p, v)) {
      if (m.contains(e.to)) has_pred.insert(e.to);
    }
  }
  for (const auto& [v, beta] : m.formulas) {
    if (!has_pred.contains(v)) r.problems.push_back(node_label(p, v) + " has no marked predecessor");
  }
  if (!r.problems.empty()) return r;

  Analysis an(p);
  using Site = Obligation::Site;

  {
    DistState s0 = initial_state(p);
    Evaluator ev(p, s0);
    for (const auto& f : m.at(start)) {
      bool ok = ev.holds(f);
      r.obligations.push_back({Site::Initial, node_label(p, start), f.str(), ok ? "init" : "", ok, ""});
    }
  }

  for (const auto& [v, beta] : m.formulas) {
    for (const auto& e : tg_out_edges(p, v)) {
      std::string where = edge_label(p, e);
      Post post = transfer(an, beta, e);
      if (!m.contains(e.to)) {
        if (post.unrealizable && !post.prune_rule.empty()) {
          r.pruned.push_back({e, post.prune_rule});
        } else {
          r.obligations.push_back({Site::Boundary, where, "", "", false, "edge leaves the marked region"});
        }
        continue;
      }
      std::vector<Obligation> obs;
      bool all_ok = true;
      for (const auto& f : m.at(e.to)) {
        std::string rule = discharge(an, post.facts, f);
        all_ok = all_ok && !rule.empty();
        obs.push_back({Site::Edge, where, f.str(), rule, !rule.empty(), ""});
      }
      if (!all_ok && post.unrealizable && !post.prune_rule.empty()) {
        r.pruned.push_back({e, post.prune_rule});
        continue;
      }
      r.obligations.insert(r.obligations.end(), obs.begin(), obs.end());
    }
    if (p.has_adversary()) {
      Context cx(an, beta);
      for (std::size_t j = 0; j < beta.size(); ++j) {
        std::string rule = adversary_rule(cx, v, cx.cbeta()[j]);
        r.obligations.push_back({Site::AdversaryLoop, node_label(p, v), beta[j].str(), rule, !rule.empty(), ""});
      }
    }
  }
  r.certified = r.problems.empty() && r.open_count() == 0;
  return r;
}

Marking propagate_marking(const DistProcess& p, const Formula& initial, std::size_t node_limit) {
  Analysis an(p);
  Marking m;
  TgNode start = initial_node(p);
  m.formulas[start] = canonical(initial);
  std::deque<TgNode> queue{start};

  auto stabilize = [&](const TgNode& v, Formula facts) {
    if (!p.has_adversary()) return facts;
    bool changed = true;
    while (changed) {
      changed = false;
      Context cx(an, facts);
      Formula keep;
      for (std::size_t j = 0; j < facts.size(); ++j) {
        if (!adversary_rule(cx, v, cx.cbeta()[j]).empty()) {
          keep.push_back(facts[j]);
        } else {
          changed = true;
        }
      }
      facts = std::move(keep);
    }
    return facts;
  };

  while (!queue.empty()) {
    TgNode v = queue.front();
    queue.pop_front();
    Formula beta = m.at(v);
    for (const auto& e : tg_out_edges(p, v)) {
      Post post = transfer(an, beta, e);
      if (post.unrealizable && !post.prune_rule.empty()) continue;
      Formula facts;
      for (const auto& f : post.facts) facts.push_back(f.ef);
      facts = stabilize(e.to, canonical(std::move(facts)));
      auto it = m.formulas.find(e.to);
      if (it == m.formulas.end()) {
        if (m.formulas.size() >= node_limit) {
          throw ResourceLimit("marking propagation exceeds " + std::to_string(node_limit) + " nodes");
        }
        m.formulas.emplace(e.to, std::move(facts));
        queue.push_back(e.to);
        continue;
      }
      Congruence c(facts, an.atoms);
      Formula kept;
      for (const auto& f : it->second) {
        if (c.entails(f)) kept.push_back(f);
      }
      if (kept.size() != it->second.size()) {
        it->second = stabilize(e.to, std::move(kept));
        queue.push_back(e.to);
      }
    }
  }
  return m;
}

}  // namespace procverify
