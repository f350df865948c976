#include "procverify/dsl.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "lexer.hpp"
#include "term_parser.hpp"

namespace procverify {

namespace {

using detail::Tok;
using detail::Token;
using detail::TokenCursor;

constexpr std::string_view kReservedNames[] = {"h",      "pr",     "priv", "pub",      "sig",   "enc",
                                               "decrypt", "tuple", "open", "inv",      "not",   "fresh",
                                               "hidden", "Channels"};

bool reserved_name(std::string_view w) {
  return std::find(std::begin(kReservedNames), std::end(kReservedNames), w) != std::end(kReservedNames);
}

[[noreturn]] void fail_at(const Token& t, const std::string& msg) { throw ParseError(msg, t.line, t.column); }

std::size_t read_number(TokenCursor& cur) {
  const Token& t = cur.peek();
  if (t.kind != Tok::Ident || t.text.empty() ||
      !std::all_of(t.text.begin(), t.text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    cur.fail("expected number");
  }
  cur.next();
  return std::stoul(t.text);
}

/// Component or scope name: an identifier, or `P*`.
std::string read_process_name(TokenCursor& cur) {
  std::string name = cur.expect_ident().text;
  if (cur.is_punct("*")) {
    cur.next();
    name += "*";
  }
  return name;
}

// ---------------------------------------------------------------------------
// Formulas

class FormulaReader {
 public:
  FormulaReader(TokenCursor& cur, const SymbolLookup& lookup, const DistProcess& p)
      : cur_(cur), lookup_(lookup), p_(p) {}

  Formula formula() {
    Formula out;
    cur_.expect("{");
    if (cur_.accept("}")) return out;
    do {
      out.push_back(elementary());
    } while (cur_.accept(","));
    cur_.expect("}");
    return out;
  }

  Term term() { return detail::parse_term_at(cur_, lookup_, nullptr); }

 private:
  ElementaryFormula elementary() {
    if (cur_.is_ident("fresh") || cur_.is_ident("hidden")) {
      bool fresh = cur_.next().text == "fresh";
      const Token at = cur_.peek();
      TermSet subjects = subject_list();
      if (subjects.empty()) fail_at(at, "expected at least one subject");
      Scope s = scope();
      return fresh ? ElementaryFormula::fresh(std::move(subjects), std::move(s))
                   : ElementaryFormula::hidden(std::move(subjects), std::move(s));
    }
    Expression lhs = expression();
    if (cur_.accept("=")) return ElementaryFormula::eq(std::move(lhs), expression());
    if (cur_.accept("<=")) return ElementaryFormula::sub(std::move(lhs), expression());
    if (cur_.accept(">=")) return ElementaryFormula::sup(std::move(lhs), expression());
    cur_.fail("expected '=', '<=' or '>='");
  }

  TermSet term_list() {
    TermSet out;
    cur_.expect("{");
    if (cur_.accept("}")) return out;
    do {
      out.insert(term());
    } while (cur_.accept(","));
    cur_.expect("}");
    return out;
  }

  TermSet subject_list() {
    if (cur_.is_punct("{")) return term_list();
    return TermSet{term()};
  }

  std::string known_process(const Token& at, std::string name) {
    if (name != "P*" && p_.index_of(name) == npos) fail_at(at, "unknown process '" + name + "'");
    return name;
  }

  Scope scope() {
    if (cur_.is_punct("{")) return Scope::channel_list(term_list());
    if (cur_.accept("Channels")) return Scope::all_channels();
    const Token at = cur_.peek();
    if (at.kind != Tok::Ident) cur_.fail("expected a scope");
    return Scope::of_process(known_process(at, read_process_name(cur_)));
  }

  Expression expression() {
    if (cur_.is_ident("X") && cur_.is_punct("[", 1)) {
      cur_.next();
      cur_.next();
      const Token at = cur_.peek();
      std::string name = known_process(at, read_process_name(cur_));
      cur_.expect("]");
      return Expression::knowledge(std::move(name));
    }
    if (cur_.is_ident("M") && cur_.is_punct("[", 1)) {
      cur_.next();
      cur_.next();
      Term c = term();
      cur_.expect("]");
      return Expression::channel(c);
    }
    if (cur_.is_ident("inv") && cur_.is_punct("(", 1)) {
      cur_.next();
      cur_.next();
      Term k = term();
      cur_.expect(",");
      Expression inner = expression();
      cur_.expect(")");
      return Expression::key_projection(k, std::move(inner));
    }
    if (cur_.is_ident("not") && cur_.is_punct("(", 1)) {
      cur_.next();
      cur_.next();
      Expression inner = expression();
      cur_.expect(")");
      return Expression::complement(std::move(inner));
    }
    if (cur_.is_punct("{")) return Expression::terms(term_list());
    if (cur_.is_punct("(")) {
      std::size_t mark = cur_.position();
      try {
        cur_.next();
        Expression a = expression();
        if (cur_.is_punct("&") || cur_.is_punct("|")) {
          bool both = cur_.next().text == "&";
          Expression b = expression();
          cur_.expect(")");
          return both ? Expression::intersect(std::move(a), std::move(b)) : Expression::unite(std::move(a), std::move(b));
        }
      } catch (const ParseError&) {
      }
      cur_.rewind(mark);
    }
    return Expression::term(term());
  }

  TokenCursor& cur_;
  const SymbolLookup& lookup_;
  const DistProcess& p_;
};

// ---------------------------------------------------------------------------
// Symbols of an existing process, for standalone formula/term parsing

void collect_formula_terms(const Formula& f, TermSet& out) {
  for (const auto& ef : f) ef.collect_terms(out);
}

struct Names {
  std::map<std::string, Term> vars;
  std::map<std::string, Term> consts;

  void add(const Term& t) {
    VarSet vs;
    collect_variables(t, vs);
    for (const auto& v : vs) vars.emplace(v.name(), v);
    TermSet atoms;
    collect_atoms(t, atoms);
    for (const auto& c : atoms) {
      if (c.is_constant() && !c.is_fresh() && c != Term::open_channel()) consts.emplace(c.name(), c);
    }
  }

  SymbolLookup lookup() const {
    return [this](std::string_view n) -> std::optional<Symbol> {
      if (auto it = vars.find(std::string(n)); it != vars.end()) return Symbol{Symbol::Kind::Variable, it->second.type()};
      if (auto it = consts.find(std::string(n)); it != consts.end())
        return Symbol{Symbol::Kind::Constant, it->second.type()};
      return std::nullopt;
    };
  }
};

Names names_of(const DistProcess& p) {
  Names n;
  for (const auto& c : p.components()) {
    for (const auto& v : c.variables()) n.add(v);
    for (const auto& t : c.init_vars()) n.add(t);
    for (const auto& e : c.edges()) {
      n.add(e.action.first);
      n.add(e.action.second);
    }
  }
  for (const auto& g : p.shared()) n.add(g.var);
  for (const auto& c : p.constants()) n.add(c);
  return n;
}

// ---------------------------------------------------------------------------
// Protocol parser

class ProtocolParser {
 public:
  explicit ProtocolParser(std::string_view text) : cur_(detail::tokenize(text)) {
    lookup_ = [this](std::string_view n) -> std::optional<Symbol> {
      auto it = symbols_.find(std::string(n));
      if (it == symbols_.end()) return std::nullopt;
      return it->second;
    };
  }

  ProtocolBundle run() {
    ProtocolBundle out;
    cur_.expect("protocol");
    out.name = expect_string();
    if (cur_.accept("description")) out.description = expect_string();
    while (!cur_.at_end()) {
      const Token at = cur_.peek();
      if (at.kind != Tok::Ident) cur_.fail("expected a section keyword");
      if (dp_ && at.text != "marking" && at.text != "property" && at.text != "secret") {
        fail_at(at, "'" + at.text + "' must come before the marking and property sections");
      }
      if (at.text == "types") {
        cur_.next();
        typed_block(Symbol::Kind::Variable, nullptr);
      } else if (at.text == "agents") {
        cur_.next();
        agents_block();
      } else if (at.text == "constants") {
        cur_.next();
        typed_block(Symbol::Kind::Constant, &public_constants_);
      } else if (at.text == "names") {
        cur_.next();
        typed_block(Symbol::Kind::Constant, nullptr);
      } else if (at.text == "process") {
        cur_.next();
        process_decl();
      } else if (at.text == "compose") {
        cur_.next();
        compose_decl(at);
      } else if (at.text == "shared") {
        cur_.next();
        shared_decl();
      } else if (at.text == "adversary") {
        cur_.next();
        if (adversary_) fail_at(at, "duplicate adversary statement");
        adversary_ = true;
        cur_.expect(";");
      } else if (at.text == "replication") {
        cur_.next();
        replication_ = read_number(cur_);
        if (*replication_ == 0) fail_at(at, "replication bound must be positive");
        cur_.expect(";");
      } else if (at.text == "secret") {
        cur_.next();
        const Token set_at = cur_.peek();
        for (const auto& v : term_set()) {
          if (!v.is_variable()) fail_at(set_at, "secret set contains a non-variable: " + v.str());
          out.secrets.insert(v);
        }
        cur_.expect(";");
      } else if (at.text == "marking") {
        cur_.next();
        if (marking_seen_) fail_at(at, "duplicate marking section");
        marking_seen_ = true;
        out.marking = marking_block();
      } else if (at.text == "property") {
        cur_.next();
        if (property_seen_) fail_at(at, "duplicate property");
        property_seen_ = true;
        out.property = property_decl();
      } else {
        fail_at(at, "unknown section '" + at.text + "'");
      }
    }
    out.dp = process();
    return out;
  }

 private:
  struct Declared {
    SeqProcess sp;
    Token at;
    bool used = false;
  };

  std::string expect_string() {
    if (cur_.peek().kind != Tok::String) cur_.fail("expected a string");
    return cur_.next().text;
  }

  Type read_type() {
    const Token& t = cur_.expect_ident();
    auto ty = parse_type(t.text);
    if (!ty) fail_at(t, "unknown type '" + t.text + "'");
    return *ty;
  }

  void declare(const Token& t, Symbol::Kind kind, Type type, TermSet* publish) {
    if (reserved_name(t.text)) fail_at(t, "'" + t.text + "' is a reserved word");
    if (symbols_.contains(t.text)) fail_at(t, "'" + t.text + "' is declared twice");
    symbols_.emplace(t.text, Symbol{kind, type});
    if (publish) publish->insert(Term::constant(t.text, type));
  }

  // `{ a, b : Type; ... }`
  void typed_block(Symbol::Kind kind, TermSet* publish) {
    cur_.expect("{");
    while (!cur_.accept("}")) {
      std::vector<Token> names{cur_.expect_ident()};
      while (cur_.accept(",")) names.push_back(cur_.expect_ident());
      cur_.expect(":");
      Type ty = read_type();
      cur_.expect(";");
      for (const auto& n : names) declare(n, kind, ty, publish);
    }
  }

  void agents_block() {
    cur_.expect("{");
    if (cur_.accept("}")) return;
    do {
      declare(cur_.expect_ident(), Symbol::Kind::Constant, Type::agent(), &public_constants_);
    } while (cur_.accept(","));
    cur_.accept(";");
    cur_.expect("}");
  }

  Term term(const detail::MarkerHook* hook = nullptr) { return detail::parse_term_at(cur_, lookup_, hook); }

  TermSet term_set() {
    TermSet out;
    cur_.expect("{");
    if (cur_.accept("}")) return out;
    do {
      out.insert(term());
    } while (cur_.accept(","));
    cur_.expect("}");
    return out;
  }

  struct Markers {
    VarSet inputs, fresh;
    std::map<Term, Token, TermLess> input_at;
  };

  RefinedAction action(Markers& all) {
    RefinedAction ra;
    detail::MarkerHook hook = [&](char m, const Term& v, const Token& where) {
      if (m == '^') {
        ra.input_vars.insert(v);
        all.inputs.insert(v);
        all.input_at.emplace(v, where);
      } else {
        ra.fresh_vars.insert(v);
        all.fresh.insert(v);
      }
    };
    const Token at = cur_.peek();
    try {
      if (cur_.accept("!")) {
        ra.action = Action::send(Term::open_channel(), term(&hook));
      } else if (cur_.accept("?")) {
        ra.action = Action::receive(Term::open_channel(), term(&hook));
      } else {
        Term first = term(&hook);
        if (cur_.accept("!")) {
          ra.action = Action::send(first, term(&hook));
        } else if (cur_.accept("?")) {
          ra.action = Action::receive(first, term(&hook));
        } else if (cur_.accept(":=")) {
          ra.action = Action::assign(first, term(&hook));
        } else {
          cur_.fail("expected '!', '?' or ':='");
        }
      }
    } catch (const TypeError& e) {
      fail_at(at, e.what());
    }
    return ra;
  }

  bool at_stop() const {
    return cur_.is_ident("0") && !cur_.is_punct("!", 1) && !cur_.is_punct("?", 1) && !cur_.is_punct(":=", 1);
  }

  SeqProcess sum(const std::string& name, Markers& m) {
    std::vector<SeqProcess> family{sequence(name, m)};
    while (cur_.accept("+")) family.push_back(sequence(name, m));
    return family.size() == 1 ? family.front() : choice(family);
  }

  SeqProcess sequence(const std::string& name, Markers& m) {
    if (cur_.accept("(")) {
      SeqProcess p = sum(name, m);
      cur_.expect(")");
      return p;
    }
    if (at_stop()) {
      cur_.next();
      return SeqProcess::stop(name);
    }
    const Token at = cur_.peek();
    RefinedAction ra = action(m);
    cur_.expect(".");
    SeqProcess rest = sequence(name, m);
    try {
      return prefix(ra, rest);
    } catch (const Error& e) {
      fail_at(at, e.what());
    }
  }

  SeqProcess graph_body(const std::string& name, Markers& m) {
    cur_.expect("{");
    std::vector<Edge> edges;
    std::size_t nodes = 1;
    while (!cur_.accept("}")) {
      const Token at = cur_.peek();
      std::size_t from = read_number(cur_);
      cur_.expect("->");
      std::size_t to = read_number(cur_);
      cur_.expect(":");
      RefinedAction ra = action(m);
      cur_.expect(";");
      if (from > 100000 || to > 100000) fail_at(at, "node number out of range");
      nodes = std::max({nodes, from + 1, to + 1});
      edges.push_back({from, ra.action, to});
    }
    TermSet x;
    for (const auto& e : edges) {
      collect_variables(e.action.first, x);
      collect_variables(e.action.second, x);
    }
    for (const auto& v : m.inputs) x.erase(v);
    return SeqProcess::from_graph(name, nodes, 0, std::move(edges), std::move(x), m.fresh);
  }

  void process_decl() {
    const Token at = cur_.expect_ident();
    const std::string& name = at.text;
    if (!order_.empty()) fail_at(at, "process '" + name + "' is declared after the compose statement");
    if (std::any_of(declared_.begin(), declared_.end(), [&](const Declared& d) { return d.sp.name() == name; })) {
      fail_at(at, "process '" + name + "' is declared twice");
    }
    std::optional<TermSet> init;
    std::optional<TermSet> hidden;
    if (cur_.accept("init")) init = term_set();
    if (cur_.accept("hidden")) {
      const Token h = cur_.peek();
      hidden = term_set();
      for (const auto& v : *hidden) {
        if (!v.is_variable()) fail_at(h, "hidden set contains a non-variable: " + v.str());
      }
    }
    Markers m;
    SeqProcess sp;
    try {
      if (cur_.accept("=")) {
        sp = sum(name, m);
      } else if (cur_.accept("graph")) {
        sp = graph_body(name, m);
      } else {
        cur_.fail("expected '=' or 'graph'");
      }
    } catch (const ContractViolation& e) {
      fail_at(at, e.what());
    }
    cur_.expect(";");
    if (init || hidden) {
      TermSet x = init ? *init : sp.init_vars();
      VarSet h = sp.hidden_vars();
      if (hidden) h.insert(hidden->begin(), hidden->end());
      for (const auto& v : m.inputs) {
        if (x.contains(v) || h.contains(v)) fail_at(m.input_at.at(v), "input variable " + v.name() + " is declared initialized");
      }
      try {
        sp = SeqProcess::from_graph(name, sp.node_count(), 0, sp.edges(), std::move(x), std::move(h));
      } catch (const Error& e) {
        fail_at(at, e.what());
      }
    }
    declared_.push_back({std::move(sp), at});
  }

  Declared* find_declared(const std::string& name) {
    for (auto& d : declared_) {
      if (d.sp.name() == name) return &d;
    }
    return nullptr;
  }

  void compose_decl(const Token& at) {
    if (!order_.empty()) fail_at(at, "duplicate compose statement");
    do {
      const Token& t = cur_.expect_ident();
      Declared* d = find_declared(t.text);
      if (!d) fail_at(t, "unknown process '" + t.text + "'");
      if (d->used) fail_at(t, "process '" + t.text + "' composed twice");
      d->used = true;
      order_.push_back(t.text);
    } while (cur_.accept(","));
    cur_.expect(";");
    for (const auto& d : declared_) {
      if (!d.used) fail_at(d.at, "process '" + d.sp.name() + "' is declared but not composed");
    }
  }

  void shared_decl() {
    const Token at = cur_.peek();
    Term v = term();
    if (!v.is_variable()) fail_at(at, "shared entry is not a variable");
    cur_.expect(":");
    SharedGroup g{v, {}};
    do {
      const Token& t = cur_.expect_ident();
      bool present = std::any_of(declared_.begin(), declared_.end(),
                                 [&](const Declared& d) { return member_matches(t.text, d.sp.name()); });
      if (!present) fail_at(t, "shared member '" + t.text + "' names no declared process");
      g.members.push_back(t.text);
    } while (cur_.accept(","));
    cur_.expect(";");
    if (std::any_of(shared_.begin(), shared_.end(), [&](const auto& s) { return s.first.var == v; })) {
      fail_at(at, "variable " + v.name() + " is shared twice");
    }
    shared_.emplace_back(std::move(g), at);
  }

  const DistProcess& process() {
    if (dp_) return *dp_;
    const Token at = cur_.peek();
    if (declared_.empty()) fail_at(at, "no process declared");
    std::vector<std::variant<SeqProcess, DistProcess>> parts;
    if (order_.empty()) {
      for (const auto& d : declared_) parts.emplace_back(d.sp);
    } else {
      for (const auto& n : order_) parts.emplace_back(find_declared(n)->sp);
    }
    std::vector<SharedGroup> groups;
    for (const auto& [g, tok] : shared_) groups.push_back(g);
    DistProcess dp;
    try {
      dp = compose(parts, groups);
    } catch (const Error& e) {
      fail_at(shared_.empty() ? at : shared_.front().second, e.what());
    }
    dp.add_constants(public_constants_);
    if (replication_) dp.set_replication_bound(*replication_);
    if (adversary_) dp = with_adversary(dp);
    dp_ = std::move(dp);
    return *dp_;
  }

  Marking marking_block() {
    const DistProcess& p = process();
    Marking m;
    cur_.expect("{");
    while (!cur_.accept("}")) {
      const Token at = cur_.peek();
      std::string label;
      while (!cur_.is_punct(":")) {
        if (cur_.at_end() || cur_.is_punct("}")) cur_.fail("expected ':' after node label");
        label += cur_.next().text;
      }
      cur_.next();
      auto v = parse_node_label(p, label);
      if (!v) fail_at(at, "'" + label + "' is not a node of the transition graph");
      if (m.contains(*v)) fail_at(at, "node " + label + " is marked twice");
      FormulaReader fr(cur_, lookup_, p);
      m.formulas.emplace(*v, fr.formula());
      cur_.expect(";");
    }
    return m;
  }

  Property property_decl() {
    const DistProcess& p = process();
    Property prop;
    cur_.expect("at");
    cur_.expect("{");
    if (!cur_.accept("}")) {
      do {
        const Token& t = cur_.expect_ident();
        std::size_t i = p.index_of(t.text);
        if (i == npos) fail_at(t, "unknown process '" + t.text + "'");
        cur_.expect("^");
        const Token n = cur_.peek();
        std::size_t k = read_number(cur_);
        if (k >= p.components()[i].node_count()) fail_at(n, "node " + std::to_string(k) + " out of range");
        prop.at.push_back({i, k});
      } while (cur_.accept(","));
      cur_.expect("}");
    }
    FormulaReader fr(cur_, lookup_, p);
    cur_.expect("guard");
    prop.guard = fr.formula();
    cur_.expect("goal");
    prop.goal = fr.formula();
    cur_.expect(";");
    return prop;
  }

  TokenCursor cur_;
  SymbolLookup lookup_;
  std::map<std::string, Symbol> symbols_;
  TermSet public_constants_;
  std::vector<Declared> declared_;
  std::vector<std::string> order_;
  std::vector<std::pair<SharedGroup, Token>> shared_;
  bool adversary_ = false;
  std::optional<std::size_t> replication_;
  bool marking_seen_ = false, property_seen_ = false;
  std::optional<DistProcess> dp_;
};

// ---------------------------------------------------------------------------
// Printer

std::string plain(const Term& t) { return t.str(); }

std::string set_text(const TermSet& ts) {
  std::string out = "{";
  bool first = true;
  for (const auto& t : ts) {
    out += (first ? "" : ", ") + t.str();
    first = false;
  }
  return out + "}";
}

std::string action_text(const Action& a, const std::function<std::string(const Term&)>& vt) {
  auto t = [&](const Term& x) { return print_term(x, vt); };
  bool open = a.first == Term::open_channel();
  switch (a.kind) {
    case ActionKind::Send: return open ? "! " + t(a.second) : t(a.first) + " ! " + t(a.second);
    case ActionKind::Receive: return open ? "? " + t(a.second) : t(a.first) + " ? " + t(a.second);
    case ActionKind::Assign: return t(a.first) + " := " + t(a.second);
  }
  return "";
}

bool is_tree(const SeqProcess& sp) {
  std::vector<int> indegree(sp.node_count(), 0);
  for (const auto& e : sp.edges()) ++indegree[e.to];
  if (indegree[0] != 0) return false;
  return std::all_of(indegree.begin() + 1, indegree.end(), [](int d) { return d == 1; });
}

class TreePrinter {
 public:
  explicit TreePrinter(const SeqProcess& sp) : sp_(sp) {}

  std::string top() {
    auto out = sp_.out_edges(0);
    if (out.size() <= 1) return node(0, {});
    std::string s;
    for (std::size_t i = 0; i < out.size(); ++i) s += (i ? "\n  + " : "\n    ") + branch(*out[i], {});
    return s;
  }

 private:
  std::string node(std::size_t v, VarSet seen) {
    auto out = sp_.out_edges(v);
    if (out.empty()) return "0";
    if (out.size() == 1) return branch(*out[0], seen);
    std::string s = "(";
    for (std::size_t i = 0; i < out.size(); ++i) s += (i ? " + " : "") + branch(*out[i], seen);
    return s + ")";
  }

  std::string branch(const Edge& e, VarSet seen) {
    const Action& a = e.action;
    VarSet binding_side;
    if (a.kind == ActionKind::Receive) collect_variables(a.second, binding_side);
    if (a.kind == ActionKind::Assign) collect_variables(a.first, binding_side);
    VarSet marked_here;
    auto vt = [&](const Term& v) -> std::string {
      if (seen.contains(v) || marked_here.contains(v)) return v.name();
      if (binding_side.contains(v) && !sp_.init_vars().contains(v)) {
        marked_here.insert(v);
        return "^" + v.name();
      }
      if (a.kind == ActionKind::Send && sp_.hidden_vars().contains(v)) {
        marked_here.insert(v);
        return "~" + v.name();
      }
      return v.name();
    };
    std::string text = action_text(a, vt);
    // only the first occurrence on a path carries the marker
    VarSet vars;
    collect_variables(a.first, vars);
    collect_variables(a.second, vars);
    seen.insert(vars.begin(), vars.end());
    return text + " . " + node(e.to, std::move(seen));
  }

  const SeqProcess& sp_;
};

void check_identifier(const std::string& s, const char* what) {
  bool ok = !s.empty() && detail::is_ident_char(s[0]) && s[0] != '\'' && s[0] != '@' &&
            std::all_of(s.begin(), s.end(), [](char c) { return detail::is_ident_char(c); });
  if (!ok) throw ContractViolation(std::string(what) + " '" + s + "' is not printable as an identifier");
}

void check_string(const std::string& s) {
  if (s.find('"') != std::string::npos || s.find('\n') != std::string::npos) {
    throw ContractViolation("text contains a quote or newline: " + s);
  }
}

void add_terms(const Term& t, VarSet& vars, TermSet& consts) {
  collect_variables(t, vars);
  TermSet atoms;
  collect_atoms(t, atoms);
  for (const auto& c : atoms) {
    if (c.is_constant() && !c.is_fresh() && c != Term::open_channel()) consts.insert(c);
  }
}

std::string typed_lines(const std::map<Type, std::vector<std::string>>& by_type) {
  std::string out;
  for (const auto& [ty, names] : by_type) {
    out += "  ";
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
    out += " : " + ty.str() + ";\n";
  }
  return out;
}

std::string node_text(const DistProcess& p, const TgNode& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + p.components()[i].node_label(v[i]);
  return out;
}

}  // namespace

ProtocolBundle parse_protocol(std::string_view text) { return ProtocolParser(text).run(); }

Formula parse_formula(std::string_view text, const DistProcess& p) {
  Names n = names_of(p);
  SymbolLookup lookup = n.lookup();
  TokenCursor cur(detail::tokenize(text));
  FormulaReader fr(cur, lookup, p);
  Formula f = fr.formula();
  if (!cur.at_end()) cur.fail("trailing input after formula");
  return f;
}

Term parse_term_in(std::string_view text, const DistProcess& p) {
  Names n = names_of(p);
  return parse_term(text, n.lookup());
}

std::string print_protocol(const ProtocolBundle& b) {
  const DistProcess& p = b.dp;
  check_string(b.name);
  check_string(b.description);

  VarSet vars;
  TermSet consts;
  for (const auto& c : p.components()) {
    check_identifier(c.name(), "process name");
    for (const auto& t : c.init_vars()) add_terms(t, vars, consts);
    for (const auto& t : c.hidden_vars()) add_terms(t, vars, consts);
    for (const auto& e : c.edges()) {
      add_terms(e.action.first, vars, consts);
      add_terms(e.action.second, vars, consts);
    }
  }
  for (const auto& g : p.shared()) add_terms(g.var, vars, consts);
  for (const auto& v : b.secrets) add_terms(v, vars, consts);
  TermSet formula_terms;
  for (const auto& [v, f] : b.marking.formulas) collect_formula_terms(f, formula_terms);
  collect_formula_terms(b.property.guard, formula_terms);
  collect_formula_terms(b.property.goal, formula_terms);
  for (const auto& t : formula_terms) add_terms(t, vars, consts);
  consts.insert(p.constants().begin(), p.constants().end());

  std::map<Type, std::vector<std::string>> var_types, const_types, name_types;
  std::vector<std::string> agents;
  for (const auto& v : vars) {
    check_identifier(v.name(), "variable");
    var_types[v.type()].push_back(v.name());
  }
  for (const auto& c : consts) {
    check_identifier(c.name(), "constant");
    if (!p.constants().contains(c)) {
      name_types[c.type()].push_back(c.name());
    } else if (c.type() == Type::agent()) {
      agents.push_back(c.name());
    } else {
      const_types[c.type()].push_back(c.name());
    }
  }

  std::ostringstream os;
  os << "protocol \"" << b.name << "\"\n";
  if (!b.description.empty()) os << "description \"" << b.description << "\"\n";
  os << "\ntypes {\n" << typed_lines(var_types) << "}\n";
  if (!agents.empty()) {
    os << "agents { ";
    for (std::size_t i = 0; i < agents.size(); ++i) os << (i ? ", " : "") << agents[i];
    os << " }\n";
  }
  if (!const_types.empty()) os << "constants {\n" << typed_lines(const_types) << "}\n";
  if (!name_types.empty()) os << "names {\n" << typed_lines(name_types) << "}\n";

  for (const auto& c : p.components()) {
    TermSet x = c.init_vars();
    x.erase(Term::open_channel());
    for (const auto& h : c.hidden_vars()) x.erase(h);
    os << "\nprocess " << c.name() << " init " << set_text(x) << " hidden " << set_text(c.hidden_vars());
    if (is_tree(c)) {
      os << " =" << (c.out_edges(0).size() > 1 ? "" : "\n    ") << TreePrinter(c).top() << ";\n";
    } else {
      os << " graph {\n";
      for (const auto& e : c.edges()) os << "  " << e.from << " -> " << e.to << " : " << action_text(e.action, plain) << ";\n";
      os << "};\n";
    }
  }

  os << "\ncompose ";
  for (std::size_t i = 0; i < p.components().size(); ++i) os << (i ? ", " : "") << p.components()[i].name();
  os << ";\n";
  for (const auto& g : p.shared()) {
    os << "shared " << g.var.name() << " : ";
    for (std::size_t i = 0; i < g.members.size(); ++i) os << (i ? ", " : "") << g.members[i];
    os << ";\n";
  }
  if (p.has_adversary()) os << "adversary;\n";
  if (p.replication_bound() > 0) os << "replication " << p.replication_bound() << ";\n";
  if (!b.secrets.empty()) os << "secret " << set_text(b.secrets) << ";\n";

  os << "\nmarking {\n";
  for (const auto& [v, f] : b.marking.formulas) os << "  " << node_text(p, v) << " : " << formula_str(f) << ";\n";
  os << "}\n";

  os << "\nproperty at {";
  for (std::size_t i = 0; i < b.property.at.size(); ++i) {
    const auto& np = b.property.at[i];
    os << (i ? ", " : "") << p.components().at(np.component).node_label(np.node);
  }
  os << "} guard " << formula_str(b.property.guard) << " goal " << formula_str(b.property.goal) << ";\n";
  return os.str();
}

}  // namespace procverify
