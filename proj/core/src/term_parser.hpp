#pragma once

#include <functional>

#include "lexer.hpp"
#include "procverify/term.hpp"

namespace procverify::detail {

/// Called for `^x` (input) and `~x` (fresh) markers inside process actions.
using MarkerHook = std::function<void(char marker, const Term& var, const Token& where)>;

Term parse_term_at(TokenCursor& cur, const SymbolLookup& lookup, const MarkerHook* markers);

}  // namespace procverify::detail
