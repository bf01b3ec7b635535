#include "pke/rules.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

#include "pke/common.hpp"
#include "pke/dataset.hpp"

namespace pke {

RuleSet parse_rules(std::istream& in) {
  RuleSet out;
  std::string raw;
  int physical = 0;
  while (std::getline(in, raw)) {
    ++physical;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t p = raw.find_first_not_of(" \t");
    if (p == std::string::npos) continue;
    if (raw[p] == '#') continue;

    auto fail = [&](const std::string& what) {
      throw DataError("rules line " + std::to_string(physical) + ": " + what);
    };
    std::size_t colon = raw.find(':', p);
    if (colon == std::string::npos) fail("expected '@list:' or 'match:'");
    std::string head = raw.substr(p, colon - p);
    std::istringstream body(raw.substr(colon + 1));

    if (!head.empty() && head[0] == '@') {
      std::string name = head.substr(1);
      if (name.empty()) fail("empty wordlist name");
      auto [it, inserted] = out.lists.try_emplace(name);
      if (!inserted) fail("duplicate wordlist '@" + name + "'");
      std::string tok;
      while (body >> tok) it->second.insert(lower_copy(tok));
      if (it->second.empty()) fail("empty wordlist '@" + name + "'");
    } else if (head == "match") {
      RulePattern pat;
      std::string tok;
      bool capture = false;
      std::vector<std::string> tail;
      while (body >> tok) {
        if (tok == "->") {
          capture = true;
          continue;
        }
        if (capture) {
          tail.push_back(tok);
          continue;
        }
        RulePattern::Atom atom;
        if (tok == "*") {
          atom.kind = RulePattern::Atom::Kind::Wildcard;
        } else if (tok[0] == '@') {
          atom.kind = RulePattern::Atom::Kind::List;
          atom.value = tok.substr(1);
          if (atom.value.empty()) fail("empty list reference");
          if (!out.lists.count(atom.value)) fail("unknown wordlist '@" + atom.value + "'");
        } else {
          atom.kind = RulePattern::Atom::Kind::Literal;
          atom.value = lower_copy(tok);
        }
        pat.atoms.push_back(std::move(atom));
      }
      if (pat.atoms.empty()) fail("pattern has no atoms");
      pat.capture_begin = 0;
      pat.capture_end = static_cast<int>(pat.atoms.size());
      if (capture) {
        if (tail.size() != 2) fail("capture range needs two numbers");
        for (const std::string& num : tail) {
          for (char c : num) {
            if (!is_ascii_digit(c)) fail("capture range needs two numbers");
          }
        }
        pat.capture_begin = std::stoi(tail[0]);
        pat.capture_end = std::stoi(tail[1]);
        if (pat.capture_begin >= pat.capture_end ||
            pat.capture_end > static_cast<int>(pat.atoms.size())) {
          fail("capture range out of pattern bounds");
        }
      }
      out.patterns.push_back(std::move(pat));
    } else {
      fail("expected '@list:' or 'match:'");
    }
  }
  return out;
}

std::vector<std::string> rule_baseline(const RuleSet& rules,
                                       const std::vector<std::string>& tokens) {
  int n = static_cast<int>(tokens.size());
  std::vector<std::string> low;
  low.reserve(tokens.size());
  for (const std::string& t : tokens) low.push_back(lower_copy(t));

  std::vector<std::pair<int, int>> captures;
  for (const RulePattern& pat : rules.patterns) {
    int m = static_cast<int>(pat.atoms.size());
    for (int at = 0; at + m <= n; ++at) {
      bool ok = true;
      for (int j = 0; j < m && ok; ++j) {
        const RulePattern::Atom& atom = pat.atoms[static_cast<std::size_t>(j)];
        const std::string& tok = low[static_cast<std::size_t>(at + j)];
        switch (atom.kind) {
          case RulePattern::Atom::Kind::Wildcard:
            break;
          case RulePattern::Atom::Kind::Literal:
            ok = (tok == atom.value);
            break;
          case RulePattern::Atom::Kind::List:
            ok = rules.lists.at(atom.value).count(tok) > 0;
            break;
        }
      }
      if (ok) captures.push_back({at + pat.capture_begin, at + pat.capture_end});
    }
  }
  // Leftmost-longest: earlier start wins, then the longer capture; the rest
  // must not overlap a winner.
  std::sort(captures.begin(), captures.end(),
            [](const std::pair<int, int>& a, const std::pair<int, int>& b) {
              if (a.first != b.first) return a.first < b.first;
              return a.second > b.second;
            });
  std::vector<std::pair<int, int>> kept;
  int covered_to = 0;
  for (const auto& c : captures) {
    if (c.first >= covered_to) {
      kept.push_back(c);
      covered_to = c.second;
    }
  }
  return iobes_tags(n, kept);
}

}  // namespace pke
