#pragma once

// Dolev-Yao derivability: what an adversary can compute from a set of
// ground messages.

#include "procverify/term.hpp"

namespace procverify {

/// Knowledge closed under analysis (untupling, decryption with derivable
/// keys). Composition is checked on demand by `derivable`.
class Knowledge {
 public:
  Knowledge() = default;
  explicit Knowledge(const TermSet& initial);

  void add(const Term& t);
  void add_all(const TermSet& ts);

  /// goal can be composed from the analyzed set with tuple, pr, h, encrypt,
  /// decrypt and pub; priv(A) only if known; sig(e,A) needs e and priv(A).
  bool derivable(const Term& goal) const;

  const TermSet& analyzed() const { return analyzed_; }

 private:
  void saturate();
  bool can_open(const Term& enc) const;

  TermSet analyzed_;
  std::vector<Term> sealed_;  // encryptions whose key is not derivable yet
};

bool adversary_can_derive(const TermSet& knowledge, const Term& goal);

}  // namespace procverify
