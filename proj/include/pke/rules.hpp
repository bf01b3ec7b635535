#ifndef PKE_RULES_HPP
#define PKE_RULES_HPP

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace pke {

/// Token-level pattern for the hand-written extraction baseline.  Atoms
/// match exactly one token each: a lowercase literal, a named wordlist, or
/// the '*' wildcard.  The capture range selects which matched tokens become
/// the span (defaults to the whole pattern).
struct RulePattern {
  struct Atom {
    enum class Kind { Literal, List, Wildcard } kind = Kind::Literal;
    std::string value;  // literal text or list name
  };
  std::vector<Atom> atoms;
  int capture_begin = 0;
  int capture_end = 0;  // exclusive
};

struct RuleSet {
  std::unordered_map<std::string, std::unordered_set<std::string>> lists;
  std::vector<RulePattern> patterns;
};

/// Line-based rule DSL:
///
///   # comment
///   @verbs: pass insert advance
///   match: @verbs * wire
///   match: remove the @tools -> 0 2
///
/// '@name:' defines a wordlist; 'match:' defines a pattern of literals,
/// @list references and '*' wildcards, with an optional '-> begin end'
/// capture range (token offsets inside the match, end exclusive).  Matching
/// is case-insensitive. Malformed lines throw DataError.
RuleSet parse_rules(std::istream& in);

/// Applies every pattern at every position; overlapping captures are
/// resolved leftmost-longest, and the winners are emitted as IOBES tags.
std::vector<std::string> rule_baseline(const RuleSet& rules,
                                       const std::vector<std::string>& tokens);

}  // namespace pke

#endif
