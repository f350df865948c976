// procverify: verify protocol markings, explore state spaces, export graphs.
//
// Exit codes: 0 success, 1 verification failure or counterexample,
// 2 input error, 3 resource limit.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "procverify/dsl.hpp"
#include "procverify/report.hpp"

namespace pv = procverify;

namespace {

enum Exit : int { kOk = 0, kFailed = 1, kInputError = 2, kResourceLimit = 3 };

struct RunConfig {
  std::string builtin;
  std::string file;
  std::size_t depth = 12;
  std::size_t pool = 24;
  std::size_t state_limit = 200000;
  std::uint64_t seed = 1;
  std::string format = "text";
  std::string out;
  std::string sessions;
  std::size_t agents = 2;
  bool mutant = false;
  bool reduced = false;
  std::size_t steps = 20;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

pv::ProtocolBundle load(const RunConfig& cfg, bool marking = true) {
  if (cfg.builtin.empty() == cfg.file.empty()) throw InputError("give exactly one of --builtin or --file");
  bool session_options = !cfg.sessions.empty() || cfg.mutant;
  if (!cfg.file.empty()) {
    if (session_options) throw InputError("--sessions and --mutant apply to --builtin wmf-multisession only");
    std::ifstream in(cfg.file);
    if (!in) throw InputError("cannot read " + cfg.file);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return pv::parse_protocol(ss.str());
    } catch (const pv::ParseError& e) {
      throw InputError(cfg.file + ":" + e.what());
    }
  }
  if (session_options || cfg.agents != 2) {
    if (cfg.builtin != "wmf-multisession") {
      throw InputError("--sessions, --agents and --mutant apply to --builtin wmf-multisession only");
    }
    auto sessions = pv::parse_sessions(cfg.sessions.empty() ? "1->2" : cfg.sessions);
    auto variant = cfg.mutant ? pv::WmfVariant::DropSender : pv::WmfVariant::Standard;
    return pv::wmf_bundle(cfg.agents, sessions, variant, marking);
  }
  return pv::builtin(cfg.builtin);
}

pv::Format format_of(const RunConfig& cfg) {
  auto f = pv::parse_format(cfg.format);
  if (!f) throw InputError("unknown format " + cfg.format);
  return *f;
}

pv::ExploreOptions explore_options(const RunConfig& cfg) {
  pv::ExploreOptions o;
  o.depth = cfg.depth;
  o.pool = cfg.pool;
  o.state_limit = cfg.state_limit;
  return o;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out);
  if (!out) throw InputError("cannot write " + cfg.out);
  out << text;
}

int cmd_verify(const RunConfig& cfg) {
  auto b = load(cfg);
  auto f = format_of(cfg);
  auto r = pv::verify_property(b.dp, b.marking, b.property);
  emit(cfg, pv::render_verify(b, r, f));
  return r.certified && r.property && r.property->verified ? kOk : kFailed;
}

int cmd_oracle(const RunConfig& cfg) {
  auto f = format_of(cfg);
  if (f == pv::Format::Dot) throw InputError("oracle supports text and json output");
  pv::OracleRun run;
  pv::ProtocolBundle b;
  try {
    b = load(cfg);
  } catch (const pv::ResourceLimit& e) {
    // the state checks do not need a marking
    b = load(cfg, false);
    run.note = std::string("marking not checked: ") + e.what();
  }
  run.protocol = b.name;
  run.options = explore_options(cfg);
  run.seed = cfg.seed;
  auto explored = pv::explore(b.dp, run.options);
  if (b.marking.formulas.empty()) {
    run.report.states = explored.states.size();
    run.report.transitions = explored.edges.size();
    run.report.truncated = explored.truncated;
  } else {
    auto checked = pv::check_marking(b.dp, b.marking);
    run.report = pv::crosscheck_with_oracle(b.dp, b.marking, explored, checked.pruned);
  }
  if (!b.secrets.empty()) {
    run.secrecy_checked = explored.states.size();
    run.secrecy = pv::check_secrecy(b.dp, b.secrets, explored);
  }
  try {
    auto layout = pv::wmf_layout(b.dp);
    run.wmf = pv::check_wmf_integrity(b.dp, layout, explored);
  } catch (const pv::ContractViolation&) {
    // not a multi-session WMF process
  }
  emit(cfg, pv::render_oracle(run, f));
  if (!run.clean()) return kFailed;
  return explored.truncated ? kResourceLimit : kOk;
}

int cmd_simulate(const RunConfig& cfg) {
  auto b = load(cfg);
  auto f = format_of(cfg);
  if (f == pv::Format::Dot) throw InputError("simulate supports text and json output");
  auto s = pv::simulate(b.dp, cfg.steps, cfg.seed, explore_options(cfg));
  emit(cfg, pv::render_simulation(b.name, b.dp, s, cfg.seed, f));
  return kOk;
}

int cmd_graph(const RunConfig& cfg) {
  auto b = load(cfg);
  auto f = format_of(cfg);
  pv::TransitionGraph g = cfg.reduced ? pv::reduce_tg(b.dp, b.marking) : pv::build_tg(b.dp, cfg.state_limit);
  const pv::Marking* m = b.marking.formulas.empty() ? nullptr : &b.marking;
  emit(cfg, pv::render_graph(b.name, b.dp, g, cfg.reduced, m, f));
  return kOk;
}

int cmd_parse(const RunConfig& cfg) {
  auto b = load(cfg);
  emit(cfg, pv::render_parse(b, format_of(cfg)));
  return kOk;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--builtin", cfg.builtin, "Built-in protocol name")->envname("PROCVERIFY_BUILTIN");
  sub->add_option("--file", cfg.file, "Protocol description (.proto)")->envname("PROCVERIFY_FILE");
  sub->add_option("--format", cfg.format, "text, json or dot")->envname("PROCVERIFY_FORMAT");
  sub->add_option("--out", cfg.out, "Write the report to this file")->envname("PROCVERIFY_OUT");
  sub->add_option("--sessions", cfg.sessions, "WMF sessions, e.g. 1->2,1->3")->envname("PROCVERIFY_SESSIONS");
  sub->add_option("--agents", cfg.agents, "Number of WMF agents")->envname("PROCVERIFY_AGENTS");
  sub->add_flag("--mutant", cfg.mutant, "WMF variant whose intermediary drops the sender identity");
}

void add_bounds(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--depth", cfg.depth, "Exploration depth bound")->envname("PROCVERIFY_DEPTH");
  sub->add_option("--pool", cfg.pool, "Adversary message pool bound")->envname("PROCVERIFY_POOL");
  sub->add_option("--state-limit", cfg.state_limit, "Maximum number of states")->envname("PROCVERIFY_STATE_LIMIT");
  sub->add_option("--seed", cfg.seed, "Seed for every random choice")->envname("PROCVERIFY_SEED");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marking-based verification of security protocols"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto* verify = app.add_subcommand("verify", "Certify the marking and check the property");
  auto* oracle = app.add_subcommand("oracle", "Explore states and cross-check the marking");
  auto* simulate = app.add_subcommand("simulate", "Random walk through the semantics");
  auto* graph = app.add_subcommand("graph", "Export the full or reduced transition graph");
  auto* parse = app.add_subcommand("parse", "Parse a description and print it canonically");
  for (auto* sub : {verify, oracle, simulate, graph, parse}) add_common(sub, cfg);
  for (auto* sub : {oracle, simulate}) add_bounds(sub, cfg);
  graph->add_flag("--reduced", cfg.reduced, "Reduced graph instead of the full product");
  graph->add_option("--state-limit", cfg.state_limit, "Maximum number of graph nodes")->envname("PROCVERIFY_STATE_LIMIT");
  simulate->add_option("--steps", cfg.steps, "Maximum number of steps")->envname("PROCVERIFY_STEPS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (verify->parsed()) return cmd_verify(cfg);
    if (oracle->parsed()) return cmd_oracle(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (graph->parsed()) return cmd_graph(cfg);
    if (parse->parsed()) return cmd_parse(cfg);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const pv::ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kResourceLimit;
  } catch (const pv::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const pv::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const pv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
