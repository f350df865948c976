#include <algorithm>
#include <cctype>
#include <deque>
#include <set>

#include "procverify/marking.hpp"

namespace procverify {

TransitionGraph::TransitionGraph(const DistProcess& p, std::vector<TgNode> nodes, std::vector<TgEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), adversary_loops_(p.has_adversary()) {
  for (const auto& c : p.components()) {
    names_.push_back(c.name());
    std::vector<std::string> acts;
    for (const auto& e : c.edges()) acts.push_back(e.action.str());
    actions_.push_back(std::move(acts));
  }
}

bool TransitionGraph::contains(const TgNode& v) const {
  return std::find(nodes_.begin(), nodes_.end(), v) != nodes_.end();
}

std::string TransitionGraph::label(const TgNode& v) const {
  std::string out;
  for (std::size_t i = 0; i < v.size() && i < names_.size(); ++i) out += names_[i] + "^" + std::to_string(v[i]);
  return out;
}

std::string TransitionGraph::edge_label(const TgEdge& e) const {
  return label(e.from) + " -[" + names_[e.actor] + ": " + actions_[e.actor][e.edge] + "]-> " + label(e.to);
}

TgNode initial_node(const DistProcess& p) { return TgNode(p.components().size(), 0); }

std::vector<TgEdge> tg_out_edges(const DistProcess& p, const TgNode& v) {
  std::vector<TgEdge> out;
  for (std::size_t i = 0; i < p.components().size(); ++i) {
    const auto& edges = p.components()[i].edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (edges[k].from != v[i]) continue;
      TgNode to = v;
      to[i] = edges[k].to;
      out.push_back({v, i, k, std::move(to)});
    }
  }
  return out;
}

std::string node_label(const DistProcess& p, const TgNode& v) {
  std::string out;
  for (std::size_t i = 0; i < p.components().size(); ++i) out += p.components()[i].node_label(v[i]);
  return out;
}

std::string edge_label(const DistProcess& p, const TgEdge& e) {
  const auto& c = p.components()[e.actor];
  return node_label(p, e.from) + " -[" + c.name() + ": " + c.edges()[e.edge].action.str() + "]-> " +
         node_label(p, e.to);
}

std::optional<TgNode> parse_node_label(const DistProcess& p, std::string_view text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  }
  TgNode out;
  std::size_t pos = 0;
  for (const auto& c : p.components()) {
    if (s.compare(pos, c.name().size(), c.name()) != 0) return std::nullopt;
    pos += c.name().size();
    if (pos < s.size() && s[pos] == '^') ++pos;
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start) return std::nullopt;
    std::size_t k = std::stoul(s.substr(start, pos - start));
    if (k >= c.node_count()) return std::nullopt;
    out.push_back(k);
  }
  if (pos != s.size()) return std::nullopt;
  return out;
}

TgNode node_of(const DistState& s) {
  TgNode out;
  for (const auto& sp : s.sp) out.push_back(sp.node);
  return out;
}

TransitionGraph build_tg(const DistProcess& p, std::size_t limit) {
  std::vector<TgNode> nodes{initial_node(p)};
  std::set<TgNode> seen{nodes.front()};
  std::vector<TgEdge> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto& e : tg_out_edges(p, nodes[i])) {
      if (seen.insert(e.to).second) {
        if (nodes.size() >= limit) throw ResourceLimit("transition graph exceeds " + std::to_string(limit) + " nodes");
        nodes.push_back(e.to);
      }
      edges.push_back(std::move(e));
    }
  }
  return TransitionGraph(p, std::move(nodes), std::move(edges));
}

std::size_t VerificationReport::open_count() const {
  return static_cast<std::size_t>(
      std::count_if(obligations.begin(), obligations.end(), [](const Obligation& o) { return !o.discharged; }));
}

namespace {

bool is_pruned(const std::vector<PrunedEdge>& pruned, const TgEdge& e) {
  return std::any_of(pruned.begin(), pruned.end(), [&](const PrunedEdge& pe) { return pe.edge == e; });
}

}  // namespace

TransitionGraph reduce_tg(const DistProcess& p, const Marking& m, const VerificationReport& r) {
  TgNode start = initial_node(p);
  std::vector<TgNode> nodes;
  std::vector<TgEdge> edges;
  if (!m.contains(start)) return TransitionGraph(p, {}, {});
  std::set<TgNode> seen{start};
  std::deque<TgNode> queue{start};
  while (!queue.empty()) {
    TgNode v = queue.front();
    queue.pop_front();
    nodes.push_back(v);
    for (auto& e : tg_out_edges(p, v)) {
      if (!m.contains(e.to) || is_pruned(r.pruned, e)) continue;
      if (seen.insert(e.to).second) queue.push_back(e.to);
      edges.push_back(std::move(e));
    }
  }
  return TransitionGraph(p, std::move(nodes), std::move(edges));
}

TransitionGraph reduce_tg(const DistProcess& p, const Marking& m) { return reduce_tg(p, m, check_marking(p, m)); }

bool node_satisfies(const TgNode& v, const std::vector<NodePredicate>& at) {
  return std::all_of(at.begin(), at.end(), [&](const NodePredicate& np) {
    return np.component < v.size() && v[np.component] == np.node;
  });
}

VerificationReport verify_property(const DistProcess& p, const Marking& m, const Property& prop) {
  VerificationReport r = check_marking(p, m);
  PropertyResult pr;
  TransitionGraph tg = reduce_tg(p, m, r);
  for (const auto& v : tg.nodes()) {
    if (!node_satisfies(v, prop.at)) continue;
    const Formula& beta = m.at(v);
    if (!implies(beta, prop.guard)) continue;
    pr.qualifying.push_back(v);
    if (!implies(beta, prop.goal)) pr.failing.push_back(v);
  }
  pr.verified = r.certified && pr.failing.empty();
  r.property = std::move(pr);
  return r;
}

OracleReport crosscheck_with_oracle(const DistProcess& p, const Marking& m, const ExploreResult& explored,
                                    const std::vector<PrunedEdge>& pruned) {
  OracleReport out;
  out.states = explored.states.size();
  out.transitions = explored.edges.size();
  out.truncated = explored.truncated;
  for (std::size_t i = 0; i < explored.states.size(); ++i) {
    const DistState& s = explored.states[i].state;
    TgNode v = node_of(s);
    std::string label = node_label(p, v);
    if (!m.contains(v)) {
      out.escapes.push_back({i, label, "node outside the marking", dump_trace(p, explored, i)});
      continue;
    }
    Evaluator ev(p, s);
    for (const auto& f : m.at(v)) {
      if (!ev.holds(f)) {
        out.violations.push_back({i, label, f.str(), dump_trace(p, explored, i)});
        break;
      }
    }
  }
  if (!pruned.empty()) {
    for (const auto& e : explored.edges) {
      if (e.actor >= p.components().size()) continue;
      TgNode from = node_of(explored.states[e.source].state);
      TgNode to = node_of(explored.states[e.target].state);
      TgEdge te{from, e.actor, e.edge, to};
      if (is_pruned(pruned, te)) {
        out.pruned_traversed.push_back({e.target, node_label(p, to), edge_label(p, te), dump_trace(p, explored, e.target)});
      }
    }
  }
  return out;
}

OracleReport crosscheck_with_oracle(const DistProcess& p, const Marking& m, const ExploreOptions& opts,
                                    const std::vector<PrunedEdge>& pruned) {
  return crosscheck_with_oracle(p, m, explore(p, opts), pruned);
}

}  // namespace procverify
