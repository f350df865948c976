#include "procverify/protocols.hpp"

#include <algorithm>
#include <charconv>

namespace procverify {

namespace {

Term var(const std::string& name, Type t) { return Term::variable(name, t); }

RefinedAction act(Action a, VarSet in = {}, VarSet fresh = {}) { return {std::move(a), std::move(in), std::move(fresh)}; }

SeqProcess chain(const std::string& name, const std::vector<RefinedAction>& acts) {
  SeqProcess p = SeqProcess::stop(name);
  for (auto it = acts.rbegin(); it != acts.rend(); ++it) p = prefix(*it, p);
  return p;
}

Expression M(const Term& c) { return Expression::channel(c); }
Expression inv(const Term& k, const Expression& e) { return Expression::key_projection(k, e); }
Expression set_of(std::initializer_list<Term> ts) { return Expression::terms(TermSet(ts)); }
Scope adversary() { return Scope::of_process("P*"); }

TgNode node3(std::size_t a, std::size_t t, std::size_t b) { return {a, t, b}; }

// The ten nodes shared by the two intermediary examples.
const std::vector<TgNode>& intermediary_nodes() {
  static const std::vector<TgNode> nodes{node3(0, 0, 0), node3(1, 0, 0), node3(2, 0, 0), node3(1, 1, 0),
                                         node3(2, 1, 0), node3(1, 2, 0), node3(2, 2, 0), node3(1, 2, 1),
                                         node3(2, 2, 1), node3(2, 2, 2)};
  return nodes;
}

ProtocolBundle hidden_channel() {
  Term c = var("c_AB", Type::channel()), x = var("x", Type::message()), y = var("y", Type::message());
  SeqProcess a = chain("A", {act(Action::send(c, x), {}, {c})});
  SeqProcess b = chain("B", {act(Action::receive(c, y), {y}, {c})});
  ProtocolBundle out;
  out.name = "hidden-channel";
  out.description = "A sends x to B over a channel whose name only A and B know";
  out.dp = with_adversary(compose({a, b}, {SharedGroup{c, {"A", "B"}}}));
  Formula secret{ElementaryFormula::fresh({c}, adversary()), ElementaryFormula::fresh({c}, Scope::all_channels())};
  Formula b00{ElementaryFormula::eq(M(c), Expression())};
  Formula b10{ElementaryFormula::eq(M(c), set_of({x}))};
  b00.insert(b00.end(), secret.begin(), secret.end());
  b10.insert(b10.end(), secret.begin(), secret.end());
  out.marking.formulas[{0, 0}] = b00;
  out.marking.formulas[{1, 0}] = b10;
  out.marking.formulas[{1, 1}] = {ElementaryFormula::term_eq(x, y)};
  out.property = {{{1, 1}}, {}, {ElementaryFormula::term_eq(x, y)}};
  out.secrets = {x, c};
  return out;
}

ProtocolBundle shared_key() {
  Term k = var("k_AB", Type::key()), x = var("x", Type::message()), y = var("y", Type::message());
  Term open = Term::open_channel();
  SeqProcess a = chain("A", {act(Action::send(open, Term::encrypt(k, x)), {}, {k})});
  SeqProcess b = chain("B", {act(Action::receive(open, Term::encrypt(k, y)), {y}, {k})});
  ProtocolBundle out;
  out.name = "shared-key";
  out.description = "A sends k_AB(x) to B over the open channel; only A and B hold k_AB";
  out.dp = with_adversary(compose({a, b}, {SharedGroup{k, {"A", "B"}}}));
  Formula secret{ElementaryFormula::hidden({k}, adversary()), ElementaryFormula::hidden({k}, Scope::all_channels())};
  Formula b00{ElementaryFormula::eq(inv(k, M(open)), Expression())};
  Formula b10{ElementaryFormula::eq(inv(k, M(open)), set_of({x}))};
  b00.insert(b00.end(), secret.begin(), secret.end());
  b10.insert(b10.end(), secret.begin(), secret.end());
  out.marking.formulas[{0, 0}] = b00;
  out.marking.formulas[{1, 0}] = b10;
  out.marking.formulas[{1, 1}] = {ElementaryFormula::term_eq(x, y)};
  out.property = {{{1, 1}}, {}, {ElementaryFormula::term_eq(x, y)}};
  out.secrets = {x, k};
  return out;
}

// Per-node contents of the three tracked sets in the intermediary examples:
// index 0 the A-T set, 1 the B-T set, 2 the A-B set.
struct IntermediaryShape {
  bool a_sent1, a_sent2, t_got, t_sent, b_got;
};

IntermediaryShape shape_of(const TgNode& v) { return {v[0] >= 1, v[0] >= 2, v[1] >= 1, v[1] >= 2, v[2] >= 1}; }

ProtocolBundle trusted_channel() {
  Term c_at = var("c_AT", Type::channel()), c_bt = var("c_BT", Type::channel()), c_ab = var("c_AB", Type::channel());
  Term x = var("x", Type::message()), y = var("y", Type::message());
  Term u = var("u", Type::channel()), v = var("v", Type::channel());
  SeqProcess a = chain("A", {act(Action::send(c_at, c_ab), {}, {c_at, c_ab}), act(Action::send(c_ab, x))});
  SeqProcess t = chain("T", {act(Action::receive(c_at, u), {u}, {c_at}), act(Action::send(c_bt, u), {}, {c_bt})});
  SeqProcess b = chain("B", {act(Action::receive(c_bt, v), {v}, {c_bt}), act(Action::receive(v, y), {y})});
  ProtocolBundle out;
  out.name = "trusted-channel";
  out.description = "A passes a hidden channel name to B through T, then sends x on it";
  out.dp = with_adversary(compose({a, t, b}, {SharedGroup{c_at, {"A", "T"}}, SharedGroup{c_bt, {"B", "T"}}}));
  for (const auto& node : intermediary_nodes()) {
    if (node == node3(2, 2, 2)) {
      out.marking.formulas[node] = {ElementaryFormula::term_eq(y, x)};
      continue;
    }
    auto s = shape_of(node);
    Formula f;
    if (s.t_got) f.push_back(ElementaryFormula::term_eq(u, c_ab));
    if (s.b_got) f.push_back(ElementaryFormula::term_eq(v, u));
    f.push_back(ElementaryFormula::eq(M(c_at), s.a_sent1 ? set_of({c_ab}) : Expression()));
    f.push_back(ElementaryFormula::eq(M(c_bt), s.t_sent ? set_of({u}) : Expression()));
    f.push_back(ElementaryFormula::eq(M(c_ab), s.a_sent2 ? set_of({x}) : Expression()));
    f.push_back(ElementaryFormula::fresh({c_at, c_bt, c_ab}, adversary()));
    f.push_back(s.a_sent1 ? ElementaryFormula::fresh({c_at, c_bt}, Scope::all_channels())
                          : ElementaryFormula::fresh({c_at, c_bt, c_ab}, Scope::all_channels()));
    out.marking.formulas[node] = f;
  }
  out.property = {{{2, 2}}, {}, {ElementaryFormula::term_eq(x, y)}};
  out.secrets = {x, c_ab, c_at, c_bt};
  return out;
}

ProtocolBundle wide_mouth_frog() {
  Term k_at = var("k_AT", Type::key()), k_bt = var("k_BT", Type::key()), k_ab = var("k_AB", Type::key());
  Term x = var("x", Type::message()), y = var("y", Type::message());
  Term u = var("u", Type::key()), v = var("v", Type::key());
  Term open = Term::open_channel();
  SeqProcess a = chain("A", {act(Action::send(open, Term::encrypt(k_at, k_ab)), {}, {k_at, k_ab}),
                             act(Action::send(open, Term::encrypt(k_ab, x)))});
  SeqProcess t = chain("T", {act(Action::receive(open, Term::encrypt(k_at, u)), {u}, {k_at}),
                             act(Action::send(open, Term::encrypt(k_bt, u)), {}, {k_bt})});
  SeqProcess b = chain("B", {act(Action::receive(open, Term::encrypt(k_bt, v)), {v}, {k_bt}),
                             act(Action::receive(open, Term::encrypt(v, y)), {y})});
  ProtocolBundle out;
  out.name = "wmf";
  out.description = "Wide-Mouth Frog: A creates k_AB, sends it to B via T, then sends k_AB(x)";
  out.dp = with_adversary(compose({a, t, b}, {SharedGroup{k_at, {"A", "T"}}, SharedGroup{k_bt, {"B", "T"}}}));
  TermSet group{k_at, k_bt, k_ab};
  for (const auto& node : intermediary_nodes()) {
    if (node == node3(2, 2, 2)) {
      out.marking.formulas[node] = {ElementaryFormula::term_eq(y, x)};
      continue;
    }
    auto s = shape_of(node);
    Formula f;
    if (s.t_got) f.push_back(ElementaryFormula::term_eq(u, k_ab));
    if (s.b_got) f.push_back(ElementaryFormula::term_eq(v, u));
    f.push_back(ElementaryFormula::eq(inv(k_at, M(open)), s.a_sent1 ? set_of({k_ab}) : Expression()));
    f.push_back(ElementaryFormula::eq(inv(k_bt, M(open)), s.t_sent ? set_of({u}) : Expression()));
    f.push_back(ElementaryFormula::eq(inv(k_ab, M(open)), s.a_sent2 ? set_of({x}) : Expression()));
    f.push_back(ElementaryFormula::hidden(group, adversary()));
    f.push_back(ElementaryFormula::hidden(group, Scope::all_channels()));
    out.marking.formulas[node] = f;
  }
  out.property = {{{2, 2}}, {}, {ElementaryFormula::term_eq(x, y)}};
  out.secrets = {x, k_ab, k_at, k_bt};
  return out;
}

Term tuple(std::vector<Term> items) { return Term::tuple(std::move(items)); }

std::string agent_key_name(std::size_t i) { return "k_A" + std::to_string(i) + "T"; }

// Parses a decimal number at the front of `s`, advancing it.
std::optional<std::size_t> take_number(std::string_view& s) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr == s.data()) return std::nullopt;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return value;
}

}  // namespace

Term zero_constant() { return Term::constant("0", Type::message()); }
Term agent_constant(std::size_t i) { return Term::constant("A" + std::to_string(i), Type::agent()); }

WmfModel wmf_sessions(std::size_t n, const std::vector<SessionSpec>& sessions, WmfVariant variant) {
  if (n < 2) throw ContractViolation("the protocol needs at least two agents");
  if (sessions.empty()) throw ContractViolation("no sessions given");
  for (const auto& s : sessions) {
    if (s.sender < 1 || s.sender > n || s.receiver < 1 || s.receiver > n) {
      throw ContractViolation("session agent index out of range");
    }
    if (s.sender == s.receiver) throw ContractViolation("a session needs two distinct agents");
    if (!s.payload.is_variable()) throw ContractViolation("session payload must be a variable");
  }
  Term open = Term::open_channel();
  Term zero = zero_constant();
  std::vector<Term> agents{Term()}, keys{Term()};
  for (std::size_t i = 1; i <= n; ++i) {
    agents.push_back(agent_constant(i));
    keys.push_back(var(agent_key_name(i), Type::key()));
  }
  auto msg = [](const char* name) { return var(name, Type::message()); };

  std::vector<std::variant<SeqProcess, DistProcess>> parts;
  std::map<std::size_t, std::vector<std::string>> key_members;
  for (const auto& s : sessions) {
    std::size_t i = s.sender, j = s.receiver;
    const Term &ai = agents[i], &aj = agents[j], &ki = keys[i];
    Term r = msg("r"), xr1 = msg("xr'");
    Term kab = var("k_A" + std::to_string(i) + "A" + std::to_string(j), Type::key());
    std::string name = "A" + std::to_string(i) + "_" + std::to_string(j);
    parts.emplace_back(chain(name, {
        act(Action::send(open, Term::encrypt(ki, tuple({ai, aj, r}))), {}, {ki, r}),
        act(Action::receive(open, Term::encrypt(ki, tuple({ai, aj, r, xr1}))), {xr1}),
        act(Action::send(open, Term::encrypt(ki, tuple({ai, ai, aj, xr1, kab}))), {}, {kab}),
        act(Action::send(open, Term::encrypt(kab, tuple({s.payload, ai, aj, r})))),
    }));
    key_members[i].push_back(name);
  }

  std::vector<SeqProcess> branches;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (i == j) continue;
      const Term &ai = agents[i], &aj = agents[j], &ki = keys[i], &kj = keys[j];
      Term xr = msg("xr"), r1 = msg("r'"), r2 = msg("r''"), xr3 = msg("xr'''");
      Term k = var("k", Type::key());
      Term last = variant == WmfVariant::Standard ? tuple({zero, ai, aj, xr3, k}) : tuple({zero, aj, xr3, k});
      branches.push_back(chain("T", {
          act(Action::receive(open, Term::encrypt(ki, tuple({ai, aj, xr}))), {xr}, {ki}),
          act(Action::send(open, Term::encrypt(ki, tuple({ai, aj, xr, r1}))), {}, {r1}),
          act(Action::receive(open, Term::encrypt(ki, tuple({ai, ai, aj, r1, k}))), {k}),
          act(Action::send(open, Term::encrypt(kj, tuple({zero, r2}))), {}, {kj, r2}),
          act(Action::receive(open, Term::encrypt(kj, tuple({r2, xr3, aj}))), {xr3}),
          act(Action::send(open, Term::encrypt(kj, last))),
      }));
    }
  }
  VarSet all_keys(keys.begin() + 1, keys.end());
  parts.emplace_back(replicate(choice(branches), sessions.size(), all_keys));
  for (std::size_t i = 1; i <= n; ++i) key_members[i].push_back("T");

  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t count = static_cast<std::size_t>(
        std::count_if(sessions.begin(), sessions.end(), [&](const SessionSpec& s) { return s.receiver == j; }));
    if (count == 0) continue;
    const Term &aj = agents[j], &kj = keys[j];
    Term xr2 = msg("xr''"), r3 = msg("r'''"), y = msg("y"), z = msg("z");
    Term a = var("a", Type::agent()), xk = var("xk", Type::key());
    std::string name = "B" + std::to_string(j);
    SeqProcess b = chain(name, {
        act(Action::receive(open, Term::encrypt(kj, tuple({zero, xr2}))), {xr2}, {kj}),
        act(Action::send(open, Term::encrypt(kj, tuple({xr2, r3, aj}))), {}, {r3}),
        act(Action::receive(open, Term::encrypt(kj, tuple({zero, a, aj, r3, xk}))), {a, xk}),
        act(Action::receive(open, Term::encrypt(xk, tuple({y, a, aj, z}))), {y, z}),
    });
    parts.emplace_back(replicate(b, count, {kj}));
    key_members[j].push_back(name);
  }

  std::vector<SharedGroup> shared;
  for (const auto& [i, members] : key_members) shared.push_back({keys[i], members});
  DistProcess dp = compose(parts, shared);
  TermSet constants(agents.begin() + 1, agents.end());
  constants.insert(zero);
  dp.add_constants(constants);
  dp = with_adversary(dp);
  WmfLayout layout = wmf_layout(dp);
  return {std::move(dp), std::move(layout)};
}

WmfLayout wmf_layout(const DistProcess& p) {
  WmfLayout out;
  for (const auto& c : p.constants()) {
    const std::string& name = c.name();
    if (c.type() == Type::agent() && name.size() > 1 && name[0] == 'A') ++out.n;
  }
  if (out.n < 2) throw ContractViolation("not a multi-session Wide-Mouth Frog process");
  out.agent_keys.resize(out.n);
  for (const auto& g : p.shared()) {
    for (std::size_t i = 1; i <= out.n; ++i) {
      if (g.var.name() == agent_key_name(i)) out.agent_keys[i - 1] = g.var;
    }
  }
  for (std::size_t c = 0; c < p.components().size(); ++c) {
    const auto& sp = p.components()[c];
    std::string_view name = sp.name();
    const auto& edges = sp.edges();
    if (name.starts_with("A") && edges.size() == 4) {
      std::string_view rest = name.substr(1);
      auto i = take_number(rest);
      if (!i || !rest.starts_with("_")) throw ContractViolation("unexpected sender name " + sp.name());
      rest.remove_prefix(1);
      auto j = take_number(rest);
      if (!j) throw ContractViolation("unexpected sender name " + sp.name());
      const Term& last = edges[3].action.second;  // k(x, A_i, A_j, r)
      out.sessions.push_back({c, *i, *j, last.arg(1).arg(0), last.arg(0)});
    } else if (name.starts_with("B") && edges.size() == 4) {
      std::string_view rest = name.substr(1);
      auto j = take_number(rest);
      if (!j) throw ContractViolation("unexpected receiver name " + sp.name());
      const Term& pattern = edges[3].action.second;  // xk(y, a, A_j, z)
      const Term& body = pattern.arg(1);
      out.receivers.push_back({c, *j, body.arg(0), body.arg(1), pattern.arg(0), body.arg(3)});
    }
  }
  if (out.sessions.empty()) throw ContractViolation("no sender instances found");
  return out;
}

std::vector<SessionSpec> parse_sessions(std::string_view text) {
  std::vector<SessionSpec> out;
  while (!text.empty()) {
    while (!text.empty() && (text.front() == ' ' || text.front() == ',')) text.remove_prefix(1);
    if (text.empty()) break;
    auto i = take_number(text);
    if (!i || !text.starts_with("->")) throw ContractViolation("sessions must look like 1->2,1->3");
    text.remove_prefix(2);
    auto j = take_number(text);
    if (!j) throw ContractViolation("sessions must look like 1->2,1->3");
    out.push_back({*i, *j, var("x" + std::to_string(out.size() + 1), Type::message())});
  }
  if (out.empty()) throw ContractViolation("no sessions given");
  return out;
}

ProtocolBundle wmf_bundle(std::size_t n, const std::vector<SessionSpec>& sessions, WmfVariant variant, bool marking) {
  WmfModel model = wmf_sessions(n, sessions, variant);
  ProtocolBundle out;
  out.name = "wmf-multisession";
  out.description = "Wide-Mouth Frog sessions between n agents through a trusted intermediary";
  out.dp = model.dp;
  TermSet group;
  for (const auto& k : model.layout.agent_keys) {
    if (k) group.insert(k);
  }
  for (const auto& s : model.layout.sessions) group.insert(s.key);
  Formula initial{ElementaryFormula::hidden(group, adversary()),
                  ElementaryFormula::hidden(group, Scope::all_channels())};
  for (const auto& k : group) initial.push_back(ElementaryFormula::eq(inv(k, M(Term::open_channel())), Expression()));
  out.secrets = group;
  for (const auto& s : model.layout.sessions) out.secrets.insert(s.payload);
  if (!marking) return out;
  out.marking = propagate_marking(out.dp, initial);
  if (!model.layout.receivers.empty()) {
    const auto& r = model.layout.receivers.front();
    auto s = std::find_if(model.layout.sessions.begin(), model.layout.sessions.end(),
                          [&](const WmfSession& x) { return x.receiver == r.agent; });
    out.property = {{{r.component, model.layout.receiver_final}}, {}, {ElementaryFormula::term_eq(r.y, s->payload)}};
  }
  return out;
}

std::vector<std::string> builtin_names() {
  return {"hidden-channel", "shared-key", "trusted-channel", "wmf", "wmf-multisession"};
}

ProtocolBundle builtin(std::string_view name) {
  if (name == "hidden-channel") return hidden_channel();
  if (name == "shared-key") return shared_key();
  if (name == "trusted-channel") return trusted_channel();
  if (name == "wmf") return wide_mouth_frog();
  if (name == "wmf-multisession") return wmf_bundle(2, {{1, 2, var("x1", Type::message())}});
  throw ContractViolation("unknown builtin protocol " + std::string(name));
}

// ---------------------------------------------------------------------------
// Message forms

std::string form_name(FormTag t) {
  if (t == FormTag::Unclassified) return "Unclassified";
  return "Form" + std::to_string(static_cast<int>(t));
}

KeyTable key_table(const WmfLayout& layout, const DistState& s) {
  KeyTable out;
  out.n = layout.n;
  Binding theta = global_binding(s);
  for (std::size_t i = 0; i < layout.agent_keys.size(); ++i) {
    if (!layout.agent_keys[i]) continue;
    if (auto v = theta.lookup(layout.agent_keys[i])) out.agent_keys.emplace(*v, i + 1);
  }
  for (const auto& sess : layout.sessions) {
    if (auto v = s.sp[sess.component].binding.lookup(sess.key)) {
      out.session_keys.emplace(*v, std::make_pair(sess.sender, sess.receiver));
    }
  }
  return out;
}

std::vector<Term> tracked_messages(const KeyTable& keys, const DistState& s) {
  std::vector<Term> out;
  for (const auto& m : s.channel(Term::open_channel())) {
    if (!m.is(Fun::Encrypt)) continue;
    if (keys.agent_keys.contains(m.arg(0)) || keys.session_keys.contains(m.arg(0))) out.push_back(m);
  }
  return out;
}

MessageForm classify_message(const Term& msg, const KeyTable& keys) {
  MessageForm f;
  f.message = msg;
  if (!msg.is(Fun::Encrypt) || !msg.arg(1).is(Fun::Tuple)) return f;
  const Term& key = msg.arg(0);
  auto parts = msg.arg(1).args();
  auto agent_index = [&](const Term& t) -> std::size_t {
    for (std::size_t i = 1; i <= keys.n; ++i) {
      if (t == agent_constant(i)) return i;
    }
    return 0;
  };
  auto nonce = [](const Term& t) { return t.is_fresh(); };
  Term zero = zero_constant();

  if (auto it = keys.session_keys.find(key); it != keys.session_keys.end()) {
    auto [i, j] = it->second;
    if (parts.size() == 4 && agent_index(parts[1]) == i && agent_index(parts[2]) == j && nonce(parts[3])) {
      f = {FormTag::Form7, msg, i, j, {parts[3]}, key, parts[0]};
    }
    return f;
  }
  auto it = keys.agent_keys.find(key);
  if (it == keys.agent_keys.end()) return f;
  std::size_t owner = it->second;
  auto session_key_for = [&](const Term& k, std::size_t i, std::size_t j) {
    auto s = keys.session_keys.find(k);
    return s != keys.session_keys.end() && s->second == std::make_pair(i, j);
  };
  switch (parts.size()) {
    case 2:
      if (parts[0] == zero && nonce(parts[1])) f = {FormTag::Form4, msg, 0, owner, {parts[1]}, Term(), Term()};
      break;
    case 3:
      if (agent_index(parts[0]) == owner && agent_index(parts[1]) != 0 && nonce(parts[2])) {
        f = {FormTag::Form1, msg, owner, agent_index(parts[1]), {parts[2]}, Term(), Term()};
      } else if (nonce(parts[0]) && nonce(parts[1]) && agent_index(parts[2]) == owner) {
        f = {FormTag::Form5, msg, 0, owner, {parts[0], parts[1]}, Term(), Term()};
      }
      break;
    case 4:
      if (agent_index(parts[0]) == owner && agent_index(parts[1]) != 0 && nonce(parts[2]) && nonce(parts[3])) {
        f = {FormTag::Form2, msg, owner, agent_index(parts[1]), {parts[2], parts[3]}, Term(), Term()};
      }
      break;
    case 5: {
      std::size_t j = agent_index(parts[2]);
      if (agent_index(parts[0]) == owner && agent_index(parts[1]) == owner && j != 0 && nonce(parts[3]) &&
          session_key_for(parts[4], owner, j)) {
        f = {FormTag::Form3, msg, owner, j, {parts[3]}, parts[4], Term()};
      } else if (parts[0] == zero && j == owner && nonce(parts[3])) {
        std::size_t i = agent_index(parts[1]);
        if (i != 0 && session_key_for(parts[4], i, owner)) {
          f = {FormTag::Form6, msg, i, owner, {parts[3]}, parts[4], Term()};
        }
      }
      break;
    }
    default: break;
  }
  return f;
}

Rho build_rho(const std::vector<MessageForm>& forms) {
  Rho rho;
  auto is = [&](std::size_t a, FormTag t) { return forms[a].tag == t; };
  const std::size_t n = forms.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const auto &fa = forms[a], &fb = forms[b];
      if (is(a, FormTag::Form1) && is(b, FormTag::Form2) && fa.nonces[0] == fb.nonces[0]) rho.emplace(a, b);
      if (is(a, FormTag::Form2) && is(b, FormTag::Form3) && fa.nonces[1] == fb.nonces[0]) rho.emplace(a, b);
      if (is(a, FormTag::Form4) && is(b, FormTag::Form5) && fa.nonces[0] == fb.nonces[0]) rho.emplace(a, b);
      if (is(a, FormTag::Form5) && is(b, FormTag::Form6) && fa.nonces[1] == fb.nonces[0]) rho.emplace(a, b);
      if (is(a, FormTag::Form6) && is(b, FormTag::Form7) && fa.key == fb.key) rho.emplace(a, b);
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    Rho add;
    for (const auto& [a, b] : rho) {
      for (const auto& [c, d] : rho) {
        if (b == c && !rho.contains({a, d})) add.emplace(a, d);
      }
    }
    // a Form3 and a Form6 carrying the same key link the two halves
    for (const auto& [f1, f3] : rho) {
      if (!is(f1, FormTag::Form1) || !is(f3, FormTag::Form3)) continue;
      for (const auto& [f4, f6] : rho) {
        if (!is(f4, FormTag::Form4) || !is(f6, FormTag::Form6)) continue;
        if (forms[f3].key == forms[f6].key && !rho.contains({f3, f4})) add.emplace(f3, f4);
      }
    }
    if (!add.empty()) {
      rho.insert(add.begin(), add.end());
      changed = true;
    }
  }
  return rho;
}

std::vector<OracleViolation> check_secrecy(const DistProcess& p, const VarSet& secrets, const ExploreResult& explored) {
  std::vector<OracleViolation> out;
  for (std::size_t i = 0; i < explored.states.size(); ++i) {
    const DistState& s = explored.states[i].state;
    Binding theta = global_binding(s);
    std::optional<Knowledge> known;
    for (const auto& v : secrets) {
      auto value = theta.lookup(v);
      if (!value) continue;
      if (!known) known = adversary_knowledge(p, s);
      if (known->derivable(*value)) {
        out.push_back({i, node_label(p, s), v.name() + " = " + value->str() + " is derivable by P*", dump_trace(p, explored, i)});
      }
    }
  }
  return out;
}

WmfReport check_wmf_integrity(const DistProcess& p, const WmfLayout& layout, const ExploreResult& explored) {
  constexpr std::size_t max_issues = 50;
  WmfReport out;
  out.states = explored.states.size();
  auto report = [&](std::size_t state, std::string kind, std::string detail) {
    if (out.issues.size() < max_issues) {
      out.issues.push_back({state, std::move(kind), std::move(detail), dump_trace(p, explored, state)});
    }
  };
  Term open = Term::open_channel();
  for (std::size_t si = 0; si < explored.states.size(); ++si) {
    const DistState& s = explored.states[si].state;
    KeyTable keys = key_table(layout, s);
    std::vector<MessageForm> forms;
    for (const auto& m : tracked_messages(keys, s)) {
      forms.push_back(classify_message(m, keys));
      ++out.messages;
      ++out.form_counts[forms.back().tag];
      if (forms.back().tag == FormTag::Unclassified) report(si, "classification", "unclassified message " + m.str());
    }
    Rho rho = build_rho(forms);
    out.rho_pairs += rho.size();
    auto count_before = [&](std::size_t e, FormTag t) {
      return std::count_if(rho.begin(), rho.end(),
                           [&](const auto& pr) { return pr.second == e && forms[pr.first].tag == t; });
    };
    for (std::size_t e = 0; e < forms.size(); ++e) {
      auto fail = [&](const char* what) { report(si, "uniqueness", std::string(what) + " for " + forms[e].message.str()); };
      switch (forms[e].tag) {
        case FormTag::Form3:
          if (count_before(e, FormTag::Form1) != 1) fail("Form3 lacks a unique Form1 predecessor");
          break;
        case FormTag::Form6:
          if (count_before(e, FormTag::Form4) != 1) fail("Form6 lacks a unique Form4 predecessor");
          if (count_before(e, FormTag::Form1) != 1) fail("Form6 lacks a unique Form1 predecessor");
          break;
        case FormTag::Form7:
          if (count_before(e, FormTag::Form1) > 1) fail("Form7 has several Form1 predecessors");
          break;
        default: break;
      }
    }
    for (const auto& r : layout.receivers) {
      const SpState& st = s.sp[r.component];
      if (st.node != layout.receiver_final) continue;
      ++out.completed_receptions;
      auto y = st.binding.lookup(r.y), a = st.binding.lookup(r.a), k = st.binding.lookup(r.key),
           z = st.binding.lookup(r.nonce);
      if (!y || !a || !k || !z) {
        report(si, "integrity", "receiver " + p.components()[r.component].name() + " has unbound variables");
        continue;
      }
      Term aj = agent_constant(r.agent);
      const TermSet& wire = s.channel(open);
      bool payload_msg = wire.contains(Term::encrypt(*k, Term::tuple({*y, *a, aj, *z})));
      bool request_msg = false;
      for (const auto& [kv, idx] : keys.agent_keys) {
        if (*a == agent_constant(idx) && wire.contains(Term::encrypt(kv, Term::tuple({*a, aj, *z})))) request_msg = true;
      }
      if (!payload_msg || !request_msg) {
        report(si, "integrity", "no matching Form7/Form1 pair for " + p.components()[r.component].name());
      }
      bool same = false;
      for (const auto& sess : layout.sessions) {
        auto key = s.sp[sess.component].binding.lookup(sess.key);
        auto x = s.sp[sess.component].binding.lookup(sess.payload);
        if (key && *key == *k && x && *x == *y && *a == agent_constant(sess.sender) && sess.receiver == r.agent) same = true;
      }
      if (!same) report(si, "integrity", p.components()[r.component].name() + " received " + y->str() +
                                          ", which is not the payload of the session it completed");
    }
  }
  return out;
}

}  // namespace procverify
