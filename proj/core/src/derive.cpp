#include "procverify/derive.hpp"

#include <deque>

namespace procverify {

Knowledge::Knowledge(const TermSet& initial) { add_all(initial); }

void Knowledge::add(const Term& t) {
  Term n = normalize(t);
  if (analyzed_.contains(n)) return;
  analyzed_.insert(n);
  saturate();
}

void Knowledge::add_all(const TermSet& ts) {
  bool changed = false;
  for (const auto& t : ts) changed |= analyzed_.insert(normalize(t)).second;
  if (changed) saturate();
}

bool Knowledge::can_open(const Term& enc) const {
  const Term& key = enc.arg(0);
  if (key.is(Fun::PublicKey)) return derivable(Term::private_key(key.arg(0)));
  return derivable(key);
}

void Knowledge::saturate() {
  std::deque<Term> work(analyzed_.begin(), analyzed_.end());
  sealed_.clear();
  TermSet visited;
  auto push = [&](const Term& t) {
    if (analyzed_.insert(t).second) work.push_back(t);
  };
  bool progress = true;
  while (progress) {
    progress = false;
    while (!work.empty()) {
      Term t = work.front();
      work.pop_front();
      if (!visited.insert(t).second) continue;
      if (t.is(Fun::Tuple)) {
        for (const auto& a : t.args()) push(a);
      } else if (t.is(Fun::Encrypt)) {
        if (can_open(t)) {
          push(t.arg(1));
        } else {
          sealed_.push_back(t);
        }
      }
    }
    std::vector<Term> still;
    for (const auto& s : sealed_) {
      if (can_open(s)) {
        if (analyzed_.insert(s.arg(1)).second) work.push_back(s.arg(1));
        progress = true;
      } else {
        still.push_back(s);
      }
    }
    sealed_ = std::move(still);
    if (!work.empty()) progress = true;
  }
}

bool Knowledge::derivable(const Term& goal) const {
  Term g = normalize(goal);
  if (analyzed_.contains(g)) return true;
  if (!g.is_app()) return false;
  switch (g.fun().fun) {
    case Fun::PrivateKey: return false;
    case Fun::Signature: return derivable(g.arg(0)) && derivable(Term::private_key(g.arg(1)));
    default:
      for (const auto& a : g.args()) {
        if (!derivable(a)) return false;
      }
      return true;
  }
}

bool adversary_can_derive(const TermSet& knowledge, const Term& goal) { return Knowledge(knowledge).derivable(goal); }

}  // namespace procverify
