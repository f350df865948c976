#pragma once

// Text, JSON and DOT renderings of verification, oracle, graph and
// simulation results. JSON output is deterministic for identical inputs.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "procverify/protocols.hpp"

namespace procverify {

inline constexpr int kReportSchemaVersion = 1;

enum class Format : std::uint8_t { Text, Json, Dot };
std::optional<Format> parse_format(std::string_view s);

std::string site_name(Obligation::Site s);

/// Dot draws the reduced graph with pruned edges dashed.
std::string render_verify(const ProtocolBundle& b, const VerificationReport& r, Format f);

struct OracleRun {
  std::string protocol;
  ExploreOptions options;
  std::uint64_t seed = 0;
  OracleReport report;
  std::optional<WmfReport> wmf;
  std::size_t secrecy_checked = 0;  // states checked for payload/key derivability
  std::vector<OracleViolation> secrecy;
  std::string note;
  bool clean() const { return report.clean() && (!wmf || wmf->ok()) && secrecy.empty(); }
};

/// Dot is not available for oracle runs; throws ContractViolation.
std::string render_oracle(const OracleRun& run, Format f);

/// `marking` adds formulas as tooltips (DOT) or fields (JSON).
std::string render_graph(const std::string& protocol, const DistProcess& p, const TransitionGraph& g, bool reduced,
                         const Marking* marking, Format f);

std::string render_simulation(const std::string& protocol, const DistProcess& p, const Simulation& s,
                              std::uint64_t seed, Format f);

/// Text is the canonical DSL rendering; JSON is a structural summary.
std::string render_parse(const ProtocolBundle& b, Format f);

}  // namespace procverify
