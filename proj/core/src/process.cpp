#include "procverify/process.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>

#include "procverify/errors.hpp"

namespace procverify {

Action Action::send(Term channel, Term payload) { return {ActionKind::Send, std::move(channel), std::move(payload)}; }
Action Action::receive(Term channel, Term pattern) {
  return {ActionKind::Receive, std::move(channel), std::move(pattern)};
}
Action Action::assign(Term lhs, Term rhs) { return {ActionKind::Assign, std::move(lhs), std::move(rhs)}; }

namespace {

std::string action_text(const Action& a, const std::function<std::string(const Term&)>& var_text) {
  auto t = [&](const Term& x) { return print_term(x, var_text); };
  switch (a.kind) {
    case ActionKind::Send:
      return a.first == Term::open_channel() ? "! " + t(a.second) : t(a.first) + " ! " + t(a.second);
    case ActionKind::Receive:
      return a.first == Term::open_channel() ? "? " + t(a.second) : t(a.first) + " ? " + t(a.second);
    case ActionKind::Assign:
      return t(a.first) + " := " + t(a.second);
  }
  return "";
}

void check_action(const Action& a) {
  if (!a.first.valid() || !a.second.valid()) throw ContractViolation("action with missing term");
  if (a.external() && !is_subtype(a.first.type(), Type::channel()) && a.first.type() != Type::message()) {
    throw TypeError("channel " + a.first.str() + " has type " + a.first.type().str());
  }
  if (a.kind == ActionKind::Assign && a.first.type().kind == TypeKind::Process) {
    throw TypeError("assignment to a process term");
  }
}

VarSet action_vars(const Action& a) {
  VarSet out;
  collect_variables(a.first, out);
  collect_variables(a.second, out);
  return out;
}

}  // namespace

std::string Action::str() const {
  return action_text(*this, [](const Term& v) { return v.name(); });
}

// ---------------------------------------------------------------------------
// SeqProcess

SeqProcess SeqProcess::stop(std::string name) {
  SeqProcess p;
  p.name_ = std::move(name);
  p.node_count_ = 1;
  p.init_vars_.insert(Term::open_channel());
  return p;
}

SeqProcess SeqProcess::from_graph(std::string name, std::size_t node_count, std::size_t initial,
                                  std::vector<Edge> edges, TermSet init_vars, VarSet hidden_vars) {
  if (initial >= node_count) throw ContractViolation("initial node out of range");
  std::vector<std::vector<std::size_t>> out(node_count);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.from >= node_count || e.to >= node_count) throw ContractViolation("edge endpoint out of range");
    check_action(e.action);
    out[e.from].push_back(k);
  }
  for (const auto& v : hidden_vars) {
    if (!v.is_variable()) throw ContractViolation("hidden set contains a non-variable: " + v.str());
    init_vars.insert(v);
  }
  init_vars.insert(Term::open_channel());

  std::vector<std::size_t> index(node_count, npos);
  std::deque<std::size_t> queue{initial};
  index[initial] = 0;
  std::size_t next = 1;
  std::vector<Edge> renumbered;
  while (!queue.empty()) {
    std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t k : out[v]) {
      const Edge& e = edges[k];
      if (index[e.to] == npos) {
        index[e.to] = next++;
        queue.push_back(e.to);
      }
      renumbered.push_back({index[v], e.action, index[e.to]});
    }
  }
  SeqProcess p;
  p.name_ = std::move(name);
  p.node_count_ = next;
  p.edges_ = std::move(renumbered);
  p.init_vars_ = std::move(init_vars);
  p.hidden_vars_ = std::move(hidden_vars);
  return p;
}

std::vector<const Edge*> SeqProcess::out_edges(std::size_t node) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges_) {
    if (e.from == node) out.push_back(&e);
  }
  return out;
}

bool SeqProcess::acyclic() const {
  std::vector<int> color(node_count_, 0);
  std::function<bool(std::size_t)> dfs = [&](std::size_t v) {
    color[v] = 1;
    for (const auto& e : edges_) {
      if (e.from != v) continue;
      if (color[e.to] == 1) return false;
      if (color[e.to] == 0 && !dfs(e.to)) return false;
    }
    color[v] = 2;
    return true;
  };
  for (std::size_t v = 0; v < node_count_; ++v) {
    if (color[v] == 0 && !dfs(v)) return false;
  }
  return true;
}

std::string SeqProcess::node_label(std::size_t node) const { return name_ + "^" + std::to_string(node); }

VarSet SeqProcess::variables() const {
  VarSet out;
  for (const auto& e : edges_) {
    collect_variables(e.action.first, out);
    collect_variables(e.action.second, out);
  }
  for (const auto& t : init_vars_) collect_variables(t, out);
  return out;
}

SeqProcess SeqProcess::renamed(const Renaming& r, std::string new_name) const {
  SeqProcess p = *this;
  p.name_ = std::move(new_name);
  for (auto& e : p.edges_) {
    e.action.first = rename(e.action.first, r);
    e.action.second = rename(e.action.second, r);
  }
  p.init_vars_.clear();
  for (const auto& t : init_vars_) p.init_vars_.insert(rename(t, r));
  p.hidden_vars_.clear();
  for (const auto& t : hidden_vars_) p.hidden_vars_.insert(rename(t, r));
  return p;
}

SeqProcess SeqProcess::with_name(std::string new_name) const {
  SeqProcess p = *this;
  p.name_ = std::move(new_name);
  return p;
}

SeqProcess SeqProcess::with_hidden(const VarSet& vars) const {
  SeqProcess p = *this;
  for (const auto& v : vars) {
    p.hidden_vars_.insert(v);
    p.init_vars_.insert(v);
  }
  return p;
}

SeqProcess prefix(const RefinedAction& alpha, const SeqProcess& p) {
  for (const auto& v : alpha.input_vars) {
    if (alpha.fresh_vars.contains(v)) throw ContractViolation(v.str() + " is both an input and a fresh variable");
  }
  VarSet vars = action_vars(alpha.action);
  for (const auto& v : alpha.input_vars) {
    if (!vars.contains(v)) throw ContractViolation("input variable " + v.str() + " does not occur in the action");
  }
  for (const auto& v : alpha.fresh_vars) {
    if (!vars.contains(v)) throw ContractViolation("fresh variable " + v.str() + " does not occur in the action");
  }
  check_action(alpha.action);

  std::vector<Edge> edges;
  edges.push_back({0, alpha.action, 1});
  for (const auto& e : p.edges()) edges.push_back({e.from + 1, e.action, e.to + 1});
  TermSet x = p.init_vars();
  for (const auto& v : vars) x.insert(v);
  for (const auto& v : alpha.input_vars) x.erase(v);
  VarSet hidden = p.hidden_vars();
  for (const auto& v : alpha.fresh_vars) hidden.insert(v);
  return SeqProcess::from_graph(p.name(), p.node_count() + 1, 0, std::move(edges), std::move(x), std::move(hidden));
}

SeqProcess choice(const std::vector<SeqProcess>& family) {
  if (family.empty()) throw ContractViolation("choice over an empty family");
  std::vector<Edge> edges;
  TermSet x;
  VarSet hidden;
  std::size_t offset = 1;
  for (const auto& p : family) {
    for (const auto& e : p.edges()) {
      edges.push_back({e.from + offset, e.action, e.to + offset});
      if (e.from == 0) edges.push_back({0, e.action, e.to + offset});
    }
    x.insert(p.init_vars().begin(), p.init_vars().end());
    hidden.insert(p.hidden_vars().begin(), p.hidden_vars().end());
    offset += p.node_count();
  }
  return SeqProcess::from_graph(family.front().name(), offset, 0, std::move(edges), std::move(x), std::move(hidden));
}

// ---------------------------------------------------------------------------
// DistProcess

bool operator==(const DistProcess& a, const DistProcess& b) {
  return a.components_ == b.components_ && a.shared_ == b.shared_ && a.constants_ == b.constants_ &&
         a.adversary_ == b.adversary_ && a.replication_bound_ == b.replication_bound_;
}

bool member_matches(std::string_view member, std::string_view component) {
  if (member == component) return true;
  return component.size() > member.size() && component.starts_with(member) && component[member.size()] == '@';
}

std::size_t DistProcess::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (components_[i].name() == name) return i;
  }
  return npos;
}

bool DistProcess::is_shared(const Term& var) const {
  return std::any_of(shared_.begin(), shared_.end(), [&](const SharedGroup& g) { return g.var == var; });
}

std::vector<const SharedGroup*> DistProcess::groups_of(std::size_t component) const {
  std::vector<const SharedGroup*> out;
  const auto& name = components_.at(component).name();
  for (const auto& g : shared_) {
    if (std::any_of(g.members.begin(), g.members.end(), [&](const std::string& m) { return member_matches(m, name); }))
      out.push_back(&g);
  }
  return out;
}

void DistProcess::add_constants(const TermSet& cs) {
  for (const auto& c : cs) {
    if (!c.is_constant()) throw ContractViolation("not a constant: " + c.str());
    constants_.insert(c);
  }
}

namespace {

std::string unique_component_name(const std::vector<SeqProcess>& existing, const std::string& base) {
  auto taken = [&](const std::string& n) {
    return std::any_of(existing.begin(), existing.end(), [&](const SeqProcess& p) { return p.name() == n; });
  };
  if (!taken(base)) return base;
  for (std::size_t k = 2;; ++k) {
    std::string candidate = base + "@" + std::to_string(k);
    if (!taken(candidate)) return candidate;
  }
}

}  // namespace

DistProcess compose(const std::vector<std::variant<SeqProcess, DistProcess>>& parts,
                    const std::vector<SharedGroup>& shared) {
  DistProcess out;
  std::vector<SeqProcess> flat;
  std::vector<Renaming> prior;
  for (const auto& part : parts) {
    if (const auto* sp = std::get_if<SeqProcess>(&part)) {
      flat.push_back(*sp);
      prior.emplace_back();
    } else {
      const auto& dp = std::get<DistProcess>(part);
      if (dp.has_adversary()) throw CompositionError("cannot compose a process that already includes the adversary");
      for (std::size_t i = 0; i < dp.components().size(); ++i) {
        flat.push_back(dp.components()[i]);
        prior.push_back(i < dp.renamings().size() ? dp.renamings()[i] : Renaming{});
      }
      for (const auto& g : dp.shared()) out.shared_.push_back(g);
      out.constants_.insert(dp.constants().begin(), dp.constants().end());
      out.replication_bound_ = std::max(out.replication_bound_, dp.replication_bound());
    }
  }
  for (const auto& g : shared) {
    if (!g.var.is_variable()) throw CompositionError("shared entry is not a variable: " + g.var.str());
    if (g.members.empty()) throw CompositionError("shared variable " + g.var.str() + " has no members");
    for (const auto& m : g.members) {
      bool present = std::any_of(flat.begin(), flat.end(), [&](const SeqProcess& p) { return member_matches(m, p.name()); });
      if (!present) {
        throw CompositionError("shared variable " + g.var.str() + " names process " + m + " absent from the composition");
      }
    }
    auto same = std::find_if(out.shared_.begin(), out.shared_.end(), [&](const SharedGroup& h) { return h.var == g.var; });
    if (same != out.shared_.end()) {
      if (same->members != g.members) throw CompositionError("conflicting shared groups for " + g.var.str());
      continue;
    }
    out.shared_.push_back(g);
  }

  VarSet shared_vars;
  for (const auto& g : out.shared_) shared_vars.insert(g.var);

  std::map<Term, std::size_t, TermLess> seen;  // variable -> first component
  VarSet all_used;
  for (const auto& p : flat) {
    auto vs = p.variables();
    all_used.insert(vs.begin(), vs.end());
  }
  for (std::size_t i = 0; i < flat.size(); ++i) {
    SeqProcess p = flat[i];
    std::string name = unique_component_name(out.components_, p.name());
    Renaming r;
    for (const auto& v : p.variables()) {
      if (shared_vars.contains(v)) continue;
      auto [it, first] = seen.emplace(v, i);
      if (first) continue;
      std::string base = v.name() + "@" + std::to_string(i + 1);
      std::string candidate = base;
      for (std::size_t k = 2; all_used.contains(Term::variable(candidate, v.type())); ++k) {
        candidate = base + "_" + std::to_string(k);
      }
      Term fresh = Term::variable(candidate, v.type());
      all_used.insert(fresh);
      r.add(v, fresh);
    }
    if (!r.entries().empty() || name != p.name()) p = p.renamed(r, name);
    // shared variables are hidden in each member that uses them
    VarSet hide;
    auto used = p.variables();
    for (const auto& g : out.shared_) {
      bool member = std::any_of(g.members.begin(), g.members.end(),
                                [&](const std::string& m) { return member_matches(m, p.name()); });
      if (member && used.contains(g.var)) hide.insert(g.var);
    }
    if (!hide.empty()) p = p.with_hidden(hide);
    Renaming total = prior[i];
    if (!r.entries().empty()) {
      Renaming composed;
      VarSet covered;
      for (const auto& [from, to] : prior[i].entries()) {
        auto again = r.lookup(to);
        composed.add(from, again ? *again : to);
        covered.insert(to);
      }
      for (const auto& [from, to] : r.entries()) {
        if (!covered.contains(from)) composed.add(from, to);
      }
      total = composed;
    }
    out.components_.push_back(std::move(p));
    out.renamings_.push_back(std::move(total));
  }
  return out;
}

DistProcess replicate(const SeqProcess& p, std::size_t copies, const VarSet& keep) {
  if (copies == 0) throw ContractViolation("replication needs at least one copy");
  DistProcess out;
  for (std::size_t i = 1; i <= copies; ++i) {
    Renaming r;
    for (const auto& v : p.variables()) {
      if (keep.contains(v)) continue;
      r.add(v, Term::variable(v.name() + "@" + std::to_string(i), v.type()));
    }
    out.components_.push_back(p.renamed(r, p.name() + "@" + std::to_string(i)));
    out.renamings_.push_back(std::move(r));
  }
  out.replication_bound_ = copies;
  return out;
}

DistProcess with_adversary(const DistProcess& p) {
  if (p.has_adversary()) throw ContractViolation("process already includes the adversary");
  DistProcess out = p;
  out.adversary_ = true;
  return out;
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string to_dot(const SeqProcess& p) {
  std::ostringstream os;
  os << "digraph \"" << dot_escape(p.name()) << "\" {\n";
  for (std::size_t v = 0; v < p.node_count(); ++v) {
    os << "  n" << v << " [label=\"" << dot_escape(p.node_label(v)) << "\"" << (v == 0 ? ", shape=doublecircle" : "")
       << "];\n";
  }
  for (const auto& e : p.edges()) {
    os << "  n" << e.from << " -> n" << e.to << " [label=\"" << dot_escape(e.action.str()) << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

namespace {

void expression_from(const SeqProcess& p, std::size_t node, VarSet hatted, VarSet barred, std::ostream& os) {
  auto out = p.out_edges(node);
  if (out.empty()) {
    os << "0";
    return;
  }
  if (out.size() > 1) os << "(";
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k) os << " + ";
    const Edge& e = *out[k];
    VarSet vars = action_vars(e.action);
    VarSet hat_here, bar_here;
    for (const auto& v : vars) {
      if (!p.init_vars().contains(v) && !hatted.contains(v)) hat_here.insert(v);
      if (p.hidden_vars().contains(v) && !barred.contains(v)) bar_here.insert(v);
    }
    std::string text = action_text(e.action, [&](const Term& v) {
      if (hat_here.contains(v)) return "^" + v.name();
      if (bar_here.contains(v)) return "~" + v.name();
      return v.name();
    });
    os << "(" << text << ") . ";
    VarSet h = hatted, b = barred;
    h.insert(hat_here.begin(), hat_here.end());
    b.insert(bar_here.begin(), bar_here.end());
    expression_from(p, e.to, h, b, os);
  }
  if (out.size() > 1) os << ")";
}

}  // namespace

std::string to_expression(const SeqProcess& p) {
  std::ostringstream os;
  expression_from(p, 0, {}, {}, os);
  return os.str();
}

}  // namespace procverify
