#pragma once

// Built-in protocols with their markings, the multi-session Wide-Mouth Frog
// family, and its message-form analysis.

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "procverify/marking.hpp"

namespace procverify {

struct ProtocolBundle {
  std::string name;
  std::string description;
  DistProcess dp;
  Marking marking;
  Property property;
  /// Variables whose values P* must never derive.
  VarSet secrets;
  friend bool operator==(const ProtocolBundle&, const ProtocolBundle&) = default;
};

std::vector<std::string> builtin_names();
/// Throws ContractViolation for an unknown name.
ProtocolBundle builtin(std::string_view name);

/// The `0` constant of the WMF message forms.
Term zero_constant();
Term agent_constant(std::size_t i);

/// A_i sends `payload` to A_j; agents are numbered from 1.
struct SessionSpec {
  std::size_t sender = 1;
  std::size_t receiver = 2;
  Term payload;
};

enum class WmfVariant : std::uint8_t { Standard, DropSender };

struct WmfSession {
  std::size_t component = 0;
  std::size_t sender = 0, receiver = 0;
  Term payload;  // composed variable names
  Term key;
};

struct WmfReceiver {
  std::size_t component = 0;
  std::size_t agent = 0;
  Term y, a, key, nonce;
};

struct WmfLayout {
  std::size_t n = 0;
  std::vector<Term> agent_keys;  // k_{A_iT}, index i-1
  std::vector<WmfSession> sessions;
  std::vector<WmfReceiver> receivers;
  std::size_t receiver_final = 4;
};

struct WmfModel {
  DistProcess dp;
  WmfLayout layout;
};

/// Senders A_{ij}(x_l/x), T replicated |sessions| times, each B_j replicated
/// once per session addressed to it, plus the adversary.
WmfModel wmf_sessions(std::size_t n, const std::vector<SessionSpec>& sessions,
                      WmfVariant variant = WmfVariant::Standard);
/// Sessions given as `1->2,1->3`; payloads are named x1, x2, ...
std::vector<SessionSpec> parse_sessions(std::string_view text);
/// Bundle for a session list, with a propagated marking and the integrity
/// property for the first receiver instance. Without `marking` both are left
/// empty; propagation throws ResourceLimit on large session lists.
ProtocolBundle wmf_bundle(std::size_t n, const std::vector<SessionSpec>& sessions,
                          WmfVariant variant = WmfVariant::Standard, bool marking = true);
/// Recovers the layout of a process built by wmf_sessions, e.g. after a DSL
/// round-trip. Throws ContractViolation if the shape does not fit.
WmfLayout wmf_layout(const DistProcess& p);

enum class FormTag : std::uint8_t { Form1 = 1, Form2, Form3, Form4, Form5, Form6, Form7, Unclassified };
std::string form_name(FormTag t);

struct MessageForm {
  FormTag tag = FormTag::Unclassified;
  Term message;
  std::size_t sender = 0, receiver = 0;  // agent indices when present
  std::vector<Term> nonces;               // in order of appearance
  Term key;                               // session key carried or used
  Term payload;                           // Form7 only
};

/// Values of the long-term and session keys in one state.
struct KeyTable {
  std::size_t n = 0;
  std::map<Term, std::size_t, TermLess> agent_keys;  // value -> agent
  std::map<Term, std::pair<std::size_t, std::size_t>, TermLess> session_keys;  // value -> (i, j)
};

KeyTable key_table(const WmfLayout& layout, const DistState& s);
/// Messages of M_∘ encrypted under a table key.
std::vector<Term> tracked_messages(const KeyTable& keys, const DistState& s);
MessageForm classify_message(const Term& msg, const KeyTable& keys);

/// Pairs of indices into `forms`.
using Rho = std::set<std::pair<std::size_t, std::size_t>>;
Rho build_rho(const std::vector<MessageForm>& forms);

struct WmfIssue {
  std::size_t state = 0;
  std::string kind;  // classification, uniqueness, integrity
  std::string detail;
  std::string trace;
};

struct WmfReport {
  std::size_t states = 0;
  std::size_t messages = 0;
  std::size_t completed_receptions = 0;  // receiver instances seen at B^4
  std::map<FormTag, std::size_t> form_counts;  // summed over states
  std::size_t rho_pairs = 0;                   // summed over states
  std::vector<WmfIssue> issues;
  bool ok() const { return issues.empty(); }
};

/// States in which P* can derive the value of a secret variable.
std::vector<OracleViolation> check_secrecy(const DistProcess& p, const VarSet& secrets, const ExploreResult& explored);

WmfReport check_wmf_integrity(const DistProcess& p, const WmfLayout& layout, const ExploreResult& explored);

}  // namespace procverify
