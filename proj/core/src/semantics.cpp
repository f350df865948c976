#include "procverify/semantics.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <sstream>
#include <unordered_map>

#include "procverify/errors.hpp"

namespace procverify {

const TermSet& DistState::channel(const Term& c) const {
  static const TermSet empty;
  auto it = channels.find(c);
  return it == channels.end() ? empty : it->second;
}

DistState initial_state(const DistProcess& p) {
  DistState s;
  std::map<Term, Term, TermLess> shared_values;
  for (std::size_t i = 0; i < p.components().size(); ++i) {
    const auto& sp = p.components()[i];
    SpState st;
    for (const auto& x : sp.init_vars()) {
      if (!x.is_variable()) continue;
      Term value;
      if (p.is_shared(x)) {
        auto it = shared_values.find(x);
        if (it == shared_values.end()) {
          it = shared_values.emplace(x, Term::fresh(++s.fresh_counter, x.type())).first;
        }
        value = it->second;
      } else {
        value = Term::fresh(++s.fresh_counter, x.type());
      }
      st.binding.bind(x, value);
      st.initialized.insert(x);
    }
    s.sp.push_back(std::move(st));
  }
  return s;
}

Knowledge adversary_knowledge(const DistProcess& p, const DistState& s) {
  TermSet base = p.constants();
  base.insert(Term::open_channel());
  Knowledge k(base);
  TermSet read;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [c, msgs] : s.channels) {
      if (read.contains(c) || !k.derivable(c)) continue;
      read.insert(c);
      k.add_all(msgs);
      changed = true;
    }
  }
  return k;
}

namespace {

bool ground_under(const VarSet& vars, const VarSet& initialized) {
  return std::all_of(vars.begin(), vars.end(), [&](const Term& v) { return initialized.contains(v); });
}

DistState with_message(const DistState& s, const Term& channel, const Term& msg) {
  DistState t = s;
  t.channels[channel].insert(msg);
  return t;
}

void honest_transitions(const DistProcess& p, const DistState& s, std::size_t i, std::vector<Transition>& out) {
  const auto& sp = p.components()[i];
  const SpState& st = s.sp[i];
  for (std::size_t k = 0; k < sp.edges().size(); ++k) {
    const Edge& e = sp.edges()[k];
    if (e.from != st.node) continue;
    const Action& a = e.action;
    switch (a.kind) {
      case ActionKind::Send: {
        if (!ground_under(variables_of(a.first), st.initialized)) break;
        if (!ground_under(variables_of(a.second), st.initialized)) break;
        Term c = st.binding.apply(a.first);
        Term m = st.binding.apply(a.second);
        Transition t{i, k, Action::send(c, m), with_message(s, c, m)};
        t.target.sp[i].node = e.to;
        t.target.sp[i].last = a;
        out.push_back(std::move(t));
        break;
      }
      case ActionKind::Receive: {
        if (!ground_under(variables_of(a.first), st.initialized)) break;
        Term c = st.binding.apply(a.first);
        VarSet pattern_vars = variables_of(a.second);
        for (const auto& m : s.channel(c)) {
          auto theta = match_pattern(a.second, m, st.initialized, st.binding);
          if (!theta) continue;
          Transition t{i, k, Action::receive(c, m), s};
          SpState& ns = t.target.sp[i];
          ns.node = e.to;
          ns.last = a;
          for (const auto& [v, val] : theta->entries()) ns.binding.bind(v, val);
          ns.initialized.insert(pattern_vars.begin(), pattern_vars.end());
          out.push_back(std::move(t));
        }
        break;
      }
      case ActionKind::Assign: {
        if (!ground_under(variables_of(a.second), st.initialized)) break;
        Term value = st.binding.apply(a.second);
        auto theta = match_pattern(a.first, value, st.initialized, st.binding);
        if (!theta) break;
        Transition t{i, k, Action::assign(st.binding.apply(a.first), value), s};
        SpState& ns = t.target.sp[i];
        ns.node = e.to;
        ns.last = a;
        for (const auto& [v, val] : theta->entries()) ns.binding.bind(v, val);
        VarSet lhs_vars = variables_of(a.first);
        ns.initialized.insert(lhs_vars.begin(), lhs_vars.end());
        t.action = Action::assign(ns.binding.apply(a.first), value);
        out.push_back(std::move(t));
        break;
      }
    }
  }
}

bool type_fits(const Term& value, const Term& var) {
  Type want = var.type();
  Type have = value.type();
  if (have == want || want.kind == TypeKind::Message) return true;
  return have.kind == TypeKind::Message;
}

// Candidate instances of a partially ground pattern, built from knowledge.
class InstanceBuilder {
 public:
  InstanceBuilder(const Knowledge& k, std::vector<Term> atoms, std::size_t cap)
      : k_(k), atoms_(std::move(atoms)), cap_(cap) {}

  std::vector<Term> build(const Term& p) {
    std::vector<Term> out;
    TermSet seen;
    auto add = [&](const Term& t) {
      if (out.size() < cap_ && seen.insert(t).second) out.push_back(t);
    };
    if (variables_of(p).empty()) {
      Term n = normalize(p);
      if (k_.derivable(n)) add(n);
      return out;
    }
    if (p.is_variable()) {
      for (const auto& a : atoms_) {
        if (type_fits(a, p)) add(a);
      }
      return out;
    }
    // replays of known messages of the right shape
    for (const auto& a : k_.analyzed()) {
      if (match_pattern(p, a, {}, {})) add(a);
    }
    if (p.is(Fun::PrivateKey)) return out;
    std::vector<std::vector<Term>> parts;
    for (const auto& arg : p.args()) {
      parts.push_back(build(arg));
      if (parts.back().empty()) return out;
    }
    std::vector<std::size_t> idx(parts.size(), 0);
    while (out.size() < cap_) {
      std::vector<Term> args;
      for (std::size_t j = 0; j < parts.size(); ++j) args.push_back(parts[j][idx[j]]);
      try {
        Term t = normalize(Term::app(p.fun(), std::move(args)));
        if (k_.derivable(t)) add(t);
      } catch (const TypeError&) {
      }
      std::size_t j = 0;
      while (j < idx.size() && ++idx[j] == parts[j].size()) idx[j++] = 0;
      if (j == idx.size()) break;
    }
    return out;
  }

 private:
  const Knowledge& k_;
  std::vector<Term> atoms_;
  std::size_t cap_;
};

std::vector<Term> pool_atoms(const Knowledge& k, std::size_t cap) {
  std::vector<Term> atoms(k.analyzed().begin(), k.analyzed().end());
  std::stable_sort(atoms.begin(), atoms.end(), [](const Term& a, const Term& b) { return a.size() < b.size(); });
  if (atoms.size() > cap) atoms.resize(cap);
  return atoms;
}

void adversary_transitions(const DistProcess& p, const DistState& s, const ExploreOptions& opts,
                           std::vector<Transition>& out) {
  const std::size_t actor = p.components().size();
  Knowledge k = adversary_knowledge(p, s);
  std::map<Term, TermSet, TermLess> planned;
  std::size_t budget = opts.pool;
  auto emit = [&](const Term& c, const Term& m) {
    if (budget == 0) return;
    if (s.channel(c).contains(m) || !planned[c].insert(m).second) return;
    --budget;
    out.push_back({actor, npos, Action::send(c, m), with_message(s, c, m)});
  };

  if (opts.adversary_pool) {
    TermSet channels{Term::open_channel()};
    for (const auto& [c, msgs] : s.channels) channels.insert(c);
    for (const auto& c : channels) {
      if (!k.derivable(c)) continue;
      for (const auto& m : *opts.adversary_pool) {
        if (k.derivable(m)) emit(c, normalize(m));
      }
    }
    return;
  }

  std::vector<Term> atoms = pool_atoms(k, opts.pool);
  InstanceBuilder builder(k, atoms, opts.pool);
  TermSet receive_channels;
  for (std::size_t i = 0; i < p.components().size(); ++i) {
    const auto& st = s.sp[i];
    for (const auto* e : p.components()[i].out_edges(st.node)) {
      if (e->action.kind != ActionKind::Receive) continue;
      if (!ground_under(variables_of(e->action.first), st.initialized)) continue;
      Term c = st.binding.apply(e->action.first);
      receive_channels.insert(c);
      if (!k.derivable(c)) continue;
      Term pattern = st.binding.substitute(e->action.second);
      for (const auto& m : builder.build(pattern)) {
        if (match_pattern(e->action.second, m, st.initialized, st.binding)) emit(c, m);
      }
    }
  }

  if (s.junk_sends < opts.free_sends) {
    TermSet channels{Term::open_channel()};
    for (const auto& [c, msgs] : s.channels) channels.insert(c);
    channels.insert(receive_channels.begin(), receive_channels.end());
    for (const auto& c : channels) {
      if (!k.derivable(c)) continue;
      for (const auto& a : atoms) {
        if (s.channel(c).contains(a) || planned[c].contains(a)) continue;
        std::size_t before = out.size();
        emit(c, a);
        if (out.size() > before) out.back().target.junk_sends = s.junk_sends + 1;
        break;
      }
    }
  }
}

}  // namespace

std::vector<Transition> enabled_transitions(const DistProcess& p, const DistState& s, const ExploreOptions& opts) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < p.components().size(); ++i) honest_transitions(p, s, i, out);
  if (p.has_adversary()) adversary_transitions(p, s, opts, out);
  return out;
}

// ---------------------------------------------------------------------------
// Exploration

namespace {

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint64_t>& v) const noexcept {
    std::size_t h = v.size();
    for (auto x : v) h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

std::vector<std::uint64_t> state_key(const DistState& s) {
  std::vector<std::uint64_t> key;
  for (const auto& st : s.sp) {
    key.push_back(st.node);
    key.push_back(st.binding.size());
    for (const auto& [v, val] : st.binding.entries()) {
      key.push_back(v.id());
      key.push_back(val.id());
    }
  }
  key.push_back(s.junk_sends);
  for (const auto& [c, msgs] : s.channels) {
    key.push_back(c.id());
    key.push_back(msgs.size());
    for (const auto& m : msgs) key.push_back(m.id());
  }
  return key;
}

}  // namespace

std::vector<std::size_t> ExploreResult::trace(std::size_t index) const {
  std::vector<std::size_t> out;
  for (std::size_t i = index; i != npos; i = states.at(i).parent) out.push_back(i);
  std::reverse(out.begin(), out.end());
  return out;
}

ExploreResult explore(const DistProcess& p, const ExploreOptions& opts) {
  ExploreResult r;
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, KeyHash> index;
  DistState init = initial_state(p);
  index.emplace(state_key(init), 0);
  r.states.push_back({std::move(init), npos, 0, npos, npos, {}});
  std::deque<std::size_t> frontier{0};
  while (!frontier.empty()) {
    std::size_t cur = frontier.front();
    frontier.pop_front();
    if (r.states[cur].depth >= opts.depth) continue;
    auto transitions = enabled_transitions(p, r.states[cur].state, opts);
    for (auto& t : transitions) {
      auto key = state_key(t.target);
      auto it = index.find(key);
      std::size_t target;
      if (it != index.end()) {
        target = it->second;
      } else {
        if (r.states.size() >= opts.state_limit) {
          r.truncated = true;
          continue;
        }
        target = r.states.size();
        index.emplace(std::move(key), target);
        r.states.push_back({std::move(t.target), cur, r.states[cur].depth + 1, t.actor, t.edge, t.action});
        frontier.push_back(target);
      }
      r.edges.push_back({cur, target, t.actor, t.edge, t.action});
    }
  }
  return r;
}

Simulation simulate(const DistProcess& p, std::size_t steps, std::uint64_t seed, const ExploreOptions& opts) {
  Simulation out;
  std::mt19937_64 rng(seed);
  DistState s = initial_state(p);
  for (std::size_t k = 0; k < steps; ++k) {
    auto ts = enabled_transitions(p, s, opts);
    if (ts.empty()) {
      out.stuck = true;
      break;
    }
    auto& t = ts[static_cast<std::size_t>(rng() % ts.size())];
    s = std::move(t.target);
    out.steps.push_back({t.actor, t.action, node_label(p, s)});
  }
  out.final_state = std::move(s);
  return out;
}

std::string actor_name(const DistProcess& p, std::size_t actor) {
  if (actor < p.components().size()) return p.components()[actor].name();
  return "P*";
}

std::string node_label(const DistProcess& p, const DistState& s) {
  std::string out;
  for (std::size_t i = 0; i < p.components().size(); ++i) out += p.components()[i].node_label(s.sp[i].node);
  return out;
}

std::string dump_trace(const DistProcess& p, const ExploreResult& r, std::size_t index) {
  std::ostringstream os;
  auto path = r.trace(index);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto& prev = r.states[path[k - 1]].state;
    const auto& st = r.states[path[k]];
    os << actor_name(p, st.actor) << " ; " << st.action.str() << " ; ";
    bool any = false;
    for (const auto& [c, msgs] : st.state.channels) {
      for (const auto& m : msgs) {
        if (prev.channel(c).contains(m)) continue;
        os << (any ? ", " : "") << "+" << c << ":" << m;
        any = true;
      }
    }
    if (!any) os << "-";
    os << "\n";
  }
  const auto& last = r.states[index].state;
  os << "# state " << node_label(p, last) << "\n";
  for (const auto& [c, msgs] : last.channels) {
    os << "# M[" << c << "] = {";
    bool first = true;
    for (const auto& m : msgs) {
      os << (first ? "" : ", ") << m;
      first = false;
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace procverify
