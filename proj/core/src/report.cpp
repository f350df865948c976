#include "procverify/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "procverify/dsl.hpp"

namespace procverify {

namespace {

using nlohmann::json;

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string at_text(const DistProcess& p, const Property& prop) {
  std::string out;
  for (std::size_t i = 0; i < prop.at.size(); ++i) {
    out += (i ? ", " : "") + p.components().at(prop.at[i].component).node_label(prop.at[i].node);
  }
  return out.empty() ? "every node" : out;
}

std::string goal_text(const Formula& f) {
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) out += (i ? ", " : "") + f[i].str();
  return out;
}

std::string edge_text(const DistProcess& p, const TgEdge& e) { return edge_label(p, e); }

json node_json(const TgNode& v) { return json(std::vector<std::size_t>(v.begin(), v.end())); }

json violation_json(const OracleViolation& v) {
  return {{"state", v.state}, {"node", v.node}, {"detail", v.formula}, {"trace", v.trace}};
}

json options_json(const ExploreOptions& o) {
  return {{"depth", o.depth}, {"pool", o.pool}, {"state_limit", o.state_limit}, {"free_sends", o.free_sends}};
}

void text_violations(std::ostringstream& os, const char* title, const std::vector<OracleViolation>& vs) {
  os << title << ": " << vs.size() << "\n";
  for (const auto& v : vs) {
    os << "  state " << v.state << " at " << v.node << ": " << v.formula << "\n";
    std::istringstream lines(v.trace);
    for (std::string line; std::getline(lines, line);) os << "    " << line << "\n";
  }
}

// Pads every column but the last to its widest cell.
std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream os;
  for (const auto& r : rows) {
    os << " ";
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << " ";
      if (i + 1 < r.size()) {
        os << std::left << std::setw(static_cast<int>(width[i])) << r[i];
      } else {
        os << r[i];
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string graph_dot(const std::string& protocol, const DistProcess& p, const TransitionGraph& g, const Marking* m,
                      const std::vector<PrunedEdge>* pruned) {
  std::ostringstream os;
  os << "digraph \"" << dot_escape(protocol) << "\" {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n";
  std::map<TgNode, std::size_t> id;
  for (const auto& v : g.nodes()) {
    std::size_t n = id.size();
    id.emplace(v, n);
    os << "  n" << n << " [label=\"" << dot_escape(g.label(v)) << "\"";
    if (m && m->contains(v)) os << ", tooltip=\"" << dot_escape(formula_str(m->at(v))) << "\"";
    if (m && !m->contains(v)) os << ", style=dotted";
    os << "];\n";
  }
  auto edge_line = [&](const TgEdge& e, const char* extra) {
    if (!id.contains(e.from) || !id.contains(e.to)) return;
    const auto& c = p.components()[e.actor];
    os << "  n" << id[e.from] << " -> n" << id[e.to] << " [label=\""
       << dot_escape(c.name() + ": " + c.edges()[e.edge].action.str()) << "\"" << extra << "];\n";
  };
  for (const auto& e : g.edges()) edge_line(e, "");
  if (pruned) {
    for (const auto& pe : *pruned) {
      if (!id.contains(pe.edge.to)) {
        std::size_t n = id.size();
        id.emplace(pe.edge.to, n);
        os << "  n" << n << " [label=\"" << dot_escape(g.label(pe.edge.to)) << "\", style=dashed, color=gray];\n";
      }
      edge_line(pe.edge, ", style=dashed, color=red");
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace

std::optional<Format> parse_format(std::string_view s) {
  if (s == "text") return Format::Text;
  if (s == "json") return Format::Json;
  if (s == "dot") return Format::Dot;
  return std::nullopt;
}

std::string site_name(Obligation::Site s) {
  switch (s) {
    case Obligation::Site::Initial: return "initial";
    case Obligation::Site::Edge: return "edge";
    case Obligation::Site::AdversaryLoop: return "adversary";
    case Obligation::Site::Boundary: return "boundary";
  }
  return "?";
}

std::string render_verify(const ProtocolBundle& b, const VerificationReport& r, Format f) {
  const DistProcess& p = b.dp;
  TransitionGraph reduced = reduce_tg(p, b.marking, r);
  bool verified = r.property && r.property->verified;

  if (f == Format::Dot) return graph_dot(b.name, p, reduced, &b.marking, &r.pruned);

  if (f == Format::Json) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "verify";
    j["protocol"] = b.name;
    j["certified"] = r.certified;
    j["verified"] = verified;
    j["problems"] = r.problems;
    json obs = json::array();
    for (const auto& o : r.obligations) {
      obs.push_back({{"site", site_name(o.site)},
                     {"where", o.where},
                     {"target", o.target},
                     {"rule", o.rule},
                     {"discharged", o.discharged},
                     {"note", o.note}});
    }
    j["obligations"] = {{"total", r.obligations.size()}, {"open", r.open_count()}, {"items", obs}};
    json pruned = json::array();
    for (const auto& pe : r.pruned) pruned.push_back({{"edge", edge_text(p, pe.edge)}, {"rule", pe.rule}});
    j["pruned"] = pruned;
    j["reduced"] = {{"nodes", reduced.nodes().size()}, {"edges", reduced.edges().size()}};
    if (r.property) {
      json q = json::array(), fl = json::array();
      for (const auto& v : r.property->qualifying) q.push_back(reduced.label(v));
      for (const auto& v : r.property->failing) fl.push_back(reduced.label(v));
      j["property"] = {{"at", at_text(p, b.property)},
                       {"guard", formula_str(b.property.guard)},
                       {"goal", formula_str(b.property.goal)},
                       {"qualifying", q},
                       {"failing", fl},
                       {"verified", r.property->verified}};
    }
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  os << "protocol " << b.name << "\n";
  for (const auto& pr : r.problems) os << "problem: " << pr << "\n";
  os << "marking " << (r.certified ? "certified" : "not certified") << ": " << r.obligations.size()
     << " obligations, " << r.open_count() << " open\n";
  if (r.open_count() > 0) {
    std::vector<std::vector<std::string>> rows{{"site", "where", "obligation", "note"}};
    for (const auto& o : r.obligations) {
      if (!o.discharged) rows.push_back({site_name(o.site), o.where, o.target.empty() ? "-" : o.target, o.note});
    }
    os << "open obligations:\n" << table(rows);
  }
  os << "pruned edges: " << r.pruned.size() << "\n";
  for (const auto& pe : r.pruned) os << "  " << edge_text(p, pe.edge) << "  (" << pe.rule << ")\n";
  os << "reduced graph: " << reduced.nodes().size() << " nodes, " << reduced.edges().size() << " edges\n";
  if (r.property) {
    const auto& pr = *r.property;
    std::string where;
    for (std::size_t i = 0; i < pr.qualifying.size(); ++i) where += (i ? ", " : "") + reduced.label(pr.qualifying[i]);
    os << "property " << goal_text(b.property.goal) << " at " << at_text(p, b.property) << ": "
       << pr.qualifying.size() << " qualifying node(s)";
    if (!where.empty()) os << " (" << where << ")";
    os << "\n";
    for (const auto& v : pr.failing) os << "  fails at " << reduced.label(v) << ": " << formula_str(b.marking.at(v)) << "\n";
    if (verified && pr.qualifying.empty()) {
      os << "certified; no reachable node qualifies, property holds vacuously\n";
    } else if (verified) {
      os << "certified; property " << goal_text(b.property.goal) << " at " << where << "\n";
    } else {
      os << (r.certified ? "certified; property not verified\n" : "not certified\n");
    }
  } else {
    os << (r.certified ? "certified\n" : "not certified\n");
  }
  return os.str();
}

std::string render_oracle(const OracleRun& run, Format f) {
  if (f == Format::Dot) throw ContractViolation("oracle results have no DOT rendering");
  const OracleReport& r = run.report;
  if (f == Format::Json) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "oracle";
    j["protocol"] = run.protocol;
    j["options"] = options_json(run.options);
    j["seed"] = run.seed;
    j["states"] = r.states;
    j["transitions"] = r.transitions;
    j["truncated"] = r.truncated;
    j["clean"] = run.clean();
    if (!run.note.empty()) j["note"] = run.note;
    auto list = [](const std::vector<OracleViolation>& vs) {
      json a = json::array();
      for (const auto& v : vs) a.push_back(violation_json(v));
      return a;
    };
    j["violations"] = list(r.violations);
    j["escapes"] = list(r.escapes);
    j["pruned_traversed"] = list(r.pruned_traversed);
    j["secrecy"] = {{"checked", run.secrecy_checked}, {"derivations", list(run.secrecy)}};
    if (run.wmf) {
      json forms = json::object();
      for (const auto& [tag, n] : run.wmf->form_counts) forms[form_name(tag)] = n;
      json issues = json::array();
      for (const auto& i : run.wmf->issues) {
        issues.push_back({{"state", i.state}, {"kind", i.kind}, {"detail", i.detail}, {"trace", i.trace}});
      }
      j["wmf"] = {{"messages", run.wmf->messages},
                  {"forms", forms},
                  {"rho_pairs", run.wmf->rho_pairs},
                  {"completed_receptions", run.wmf->completed_receptions},
                  {"issues", issues}};
    }
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  os << "protocol " << run.protocol << "\n";
  os << "explored " << r.states << " states, " << r.transitions << " transitions (depth " << run.options.depth
     << ", pool " << run.options.pool << ", state limit " << run.options.state_limit << ")"
     << (r.truncated ? ", truncated" : "") << "\n";
  if (!run.note.empty()) os << "note: " << run.note << "\n";
  text_violations(os, "marking violations", r.violations);
  text_violations(os, "states outside the marking", r.escapes);
  text_violations(os, "pruned edges taken", r.pruned_traversed);
  if (run.secrecy_checked > 0) text_violations(os, "secret derivations", run.secrecy);
  if (run.wmf) {
    const WmfReport& w = *run.wmf;
    os << "message forms over " << w.messages << " tracked messages:";
    for (const auto& [tag, n] : w.form_counts) os << " " << form_name(tag) << "=" << n;
    os << "\nrho pairs: " << w.rho_pairs << "\ncompleted receptions: " << w.completed_receptions << "\n";
    os << "wmf issues: " << w.issues.size() << "\n";
    for (const auto& i : w.issues) {
      os << "  state " << i.state << " " << i.kind << ": " << i.detail << "\n";
      std::istringstream lines(i.trace);
      for (std::string line; std::getline(lines, line);) os << "    " << line << "\n";
    }
  }
  os << (run.clean() ? "clean\n" : "counterexample found\n");
  return os.str();
}

std::string render_graph(const std::string& protocol, const DistProcess& p, const TransitionGraph& g, bool reduced,
                         const Marking* marking, Format f) {
  if (f == Format::Dot) return graph_dot(protocol, p, g, marking, nullptr);
  std::map<TgNode, std::size_t> id;
  for (const auto& v : g.nodes()) id.emplace(v, id.size());
  if (f == Format::Json) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "graph";
    j["protocol"] = protocol;
    j["kind"] = reduced ? "reduced" : "full";
    json nodes = json::array();
    for (const auto& v : g.nodes()) {
      json n = {{"id", id[v]}, {"label", g.label(v)}, {"coordinates", node_json(v)}};
      if (marking) {
        n["marked"] = marking->contains(v);
        if (marking->contains(v)) n["formula"] = formula_str(marking->at(v));
      }
      json succ = json::array();
      for (const auto& e : g.edges()) {
        if (e.from == v && id.contains(e.to)) succ.push_back(id[e.to]);
      }
      n["successors"] = succ;
      nodes.push_back(n);
    }
    json edges = json::array();
    for (const auto& e : g.edges()) {
      if (!id.contains(e.to)) continue;
      const auto& c = p.components()[e.actor];
      edges.push_back({{"from", id[e.from]}, {"to", id[e.to]}, {"actor", c.name()}, {"action", c.edges()[e.edge].action.str()}});
    }
    j["nodes"] = nodes;
    j["edges"] = edges;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << (reduced ? "reduced" : "full") << " transition graph of " << protocol << ": " << g.nodes().size() << " nodes, "
     << g.edges().size() << " edges\n";
  for (const auto& v : g.nodes()) {
    os << "  " << g.label(v);
    if (marking && marking->contains(v)) os << "  " << formula_str(marking->at(v));
    os << "\n";
  }
  for (const auto& e : g.edges()) os << "  " << g.edge_label(e) << "\n";
  return os.str();
}

std::string render_simulation(const std::string& protocol, const DistProcess& p, const Simulation& s,
                              std::uint64_t seed, Format f) {
  if (f == Format::Dot) throw ContractViolation("simulations have no DOT rendering");
  if (f == Format::Json) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "simulate";
    j["protocol"] = protocol;
    j["seed"] = seed;
    json steps = json::array();
    for (const auto& st : s.steps) {
      steps.push_back({{"actor", actor_name(p, st.actor)}, {"action", st.action.str()}, {"node", st.node}});
    }
    j["steps"] = steps;
    j["stuck"] = s.stuck;
    json channels = json::object();
    for (const auto& [c, msgs] : s.final_state.channels) {
      json a = json::array();
      for (const auto& m : msgs) a.push_back(m.str());
      channels[c.str()] = a;
    }
    j["channels"] = channels;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "simulation of " << protocol << " (seed " << seed << ")\n";
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const auto& st = s.steps[i];
    os << "  " << i + 1 << ". " << actor_name(p, st.actor) << ": " << st.action.str() << "  -> " << st.node << "\n";
  }
  if (s.stuck) os << "no transition enabled\n";
  for (const auto& [c, msgs] : s.final_state.channels) {
    os << "M[" << c << "] = {";
    bool first = true;
    for (const auto& m : msgs) {
      os << (first ? "" : ", ") << m;
      first = false;
    }
    os << "}\n";
  }
  return os.str();
}

std::string render_parse(const ProtocolBundle& b, Format f) {
  if (f == Format::Text) return print_protocol(b);
  if (f == Format::Dot) {
    std::ostringstream os;
    for (const auto& c : b.dp.components()) os << to_dot(c);
    return os.str();
  }
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = "parse";
  j["protocol"] = b.name;
  j["description"] = b.description;
  json comps = json::array();
  for (const auto& c : b.dp.components()) {
    json edges = json::array();
    for (const auto& e : c.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"action", e.action.str()}});
    json x = json::array(), h = json::array();
    for (const auto& t : c.init_vars()) x.push_back(t.str());
    for (const auto& t : c.hidden_vars()) h.push_back(t.str());
    comps.push_back({{"name", c.name()}, {"nodes", c.node_count()}, {"init", x}, {"hidden", h}, {"edges", edges}});
  }
  j["components"] = comps;
  json shared = json::array();
  for (const auto& g : b.dp.shared()) shared.push_back({{"var", g.var.str()}, {"members", g.members}});
  j["shared"] = shared;
  j["adversary"] = b.dp.has_adversary();
  j["replication"] = b.dp.replication_bound();
  j["marked_nodes"] = b.marking.formulas.size();
  return j.dump(2) + "\n";
}

}  // namespace procverify
