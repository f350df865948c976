#pragma once

// The `.proto` protocol description language.
//
//   protocol "name"
//   description "text"
//   types { x, y : Message; c : Channel; }      -- variables
//   agents { A1, A2; }                          -- Agent constants known to all
//   constants { 0 : Message; }                  -- other public constants
//   names { s : Key; }                          -- constants not given to P*
//   process A init {x} hidden {c} = c ! x . 0;
//   process T graph { 0 -> 1 : ? k(^u); 1 -> 0 : ! u; };
//   compose A, B;
//   shared c : A, B;
//   adversary;
//   replication 2;
//   secret {x};                                 -- values P* must not derive
//   marking { A^0 B^0 : {M[c] = {}, fresh c P*}; }
//   property at {B^1} guard {} goal {x = y};
//
// Process expressions use `.` for prefix, `+` for choice and `0` for stop;
// `^v` marks an input variable and `~v` a fresh one. Without an `init`
// clause X follows the prefix rule; with one, the clause is authoritative.

#include <string>
#include <string_view>

#include "procverify/protocols.hpp"

namespace procverify {

/// Throws ParseError with line and column.
ProtocolBundle parse_protocol(std::string_view text);
std::string print_protocol(const ProtocolBundle& b);

/// Formula text `{ef, ...}` over the names of p.
Formula parse_formula(std::string_view text, const DistProcess& p);
/// A single term over the names of p.
Term parse_term_in(std::string_view text, const DistProcess& p);

}  // namespace procverify
