#include "pke/protocol.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <set>

#include "pke/common.hpp"

namespace pke {

const char* relation_name(RelationLabel label) {
  switch (label) {
    case RelationLabel::None: return "none";
    case RelationLabel::Next: return "next";
    case RelationLabel::If: return "if";
  }
  return "none";
}

RelationLabel relation_from_name(const std::string& name) {
  if (name == "none") return RelationLabel::None;
  if (name == "next") return RelationLabel::Next;
  if (name == "if") return RelationLabel::If;
  throw DataError("unknown relation label: " + name);
}

const ProtocolPhrase* ProtocolGraph::phrase(const std::string& id) const {
  for (const ProtocolPhrase& p : phrases) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

namespace {

// Line scanner state machine.  Block structure is tracked with a stack of
// open steps; the per-line scan walks EXPECT_STEP (indent + id), IN_STEP
// (step text) and IN_ANNOTATION (trailing "(line ...)" group), and the block
// machine sits in IN_BRANCH while steps are being added under a condition.
enum class State { ExpectStep, InStep, InAnnotation, InBranch };

struct Node {
  std::string id;
  std::string text;
  std::vector<int> source_lines;
  bool condition = false;
  int level = 0;
  int physical = 0;
  std::vector<int> children;  // indices into the node pool
};

struct LineParser {
  const std::string& line;
  int physical;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("protocol line " + std::to_string(physical) + ": " + what);
  }

  int read_indent() {
    int spaces = 0;
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) {
      if (line[pos] == '\t') fail("tabs are not allowed in indentation");
      ++spaces;
      ++pos;
    }
    if (spaces % 2 != 0) fail("indentation must use two spaces per level");
    return spaces / 2;
  }

  std::string read_id() {
    std::size_t begin = pos;
    while (pos < line.size() && (is_ascii_digit(line[pos]) || is_ascii_alpha(line[pos]))) {
      ++pos;
    }
    if (pos == begin) fail("expected step id");
    std::string id = line.substr(begin, pos - begin);
    if (pos >= line.size() || line[pos] != '.') fail("expected '.' after step id");
    ++pos;
    if (pos < line.size() && line[pos] != ' ') fail("expected space after step id");
    while (pos < line.size() && line[pos] == ' ') ++pos;
    return id;
  }
};

int parse_positive_int(const std::string& s, const LineParser& lp) {
  if (s.empty()) lp.fail("malformed line annotation");
  for (char c : s) {
    if (!is_ascii_digit(c)) lp.fail("malformed line annotation");
  }
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    lp.fail("line annotation number out of range");
  }
}

// Splits "<text> (lines A-B)" into text and source lines.  The annotation
// group is only recognised at the end of the step text.
void take_annotation(std::string& text, std::vector<int>& lines_out, const LineParser& lp) {
  while (!text.empty() && text.back() == ' ') text.pop_back();
  if (text.empty() || text.back() != ')') return;
  std::size_t open = text.rfind('(');
  if (open == std::string::npos) return;
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  bool range;
  std::string rest;
  if (inner.rfind("lines ", 0) == 0) {
    range = true;
    rest = inner.substr(6);
  } else if (inner.rfind("line ", 0) == 0) {
    range = false;
    rest = inner.substr(5);
  } else {
    return;  // ordinary parenthetical, part of the step text
  }
  if (range) {
    std::size_t dash = rest.find('-');
    if (dash == std::string::npos) lp.fail("malformed line annotation");
    int a = parse_positive_int(rest.substr(0, dash), lp);
    int b = parse_positive_int(rest.substr(dash + 1), lp);
    if (a > b) lp.fail("line annotation range is reversed");
    for (int n = a; n <= b; ++n) lines_out.push_back(n);
  } else {
    lines_out.push_back(parse_positive_int(rest, lp));
  }
  text.erase(open);
  while (!text.empty() && text.back() == ' ') text.pop_back();
}

bool first_token_is_if(const std::string& text) {
  if (text.size() < 2) return false;
  char a = ascii_lower(text[0]);
  char b = ascii_lower(text[1]);
  if (a != 'i' || b != 'f') return false;
  return text.size() == 2 || text[2] == ' ';
}

}  // namespace

ProtocolGraph parse_protocol(std::istream& in) {
  std::vector<Node> pool;
  std::vector<int> top;        // top-level step order
  std::vector<int> stack;      // indices of open steps, one per level
  std::set<std::string> seen_ids;
  State state = State::ExpectStep;

  std::string raw;
  int physical = 0;
  while (std::getline(in, raw)) {
    ++physical;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    bool blank = true;
    for (char c : raw) {
      if (c != ' ' && c != '\t') {
        blank = false;
        break;
      }
    }
    if (blank) continue;

    LineParser lp{raw, physical};
    int level = lp.read_indent();
    std::string id = lp.read_id();
    state = State::InStep;
    std::string text = raw.substr(lp.pos);
    while (!text.empty() && text.back() == ' ') text.pop_back();

    bool condition = false;
    if (!text.empty() && text.back() == ':') {
      condition = true;
      text.pop_back();
    }
    std::vector<int> source_lines;
    state = State::InAnnotation;
    take_annotation(text, source_lines, lp);
    if (text.empty()) lp.fail("empty step text");
    if (condition && !first_token_is_if(text)) {
      lp.fail("step ends with ':' but does not start with 'if'");
    }

    if (level > static_cast<int>(stack.size())) {
      lp.fail("indentation jumps more than one level");
    }
    // Close blocks down to the parent level.
    while (static_cast<int>(stack.size()) > level) {
      const Node& closing = pool[static_cast<std::size_t>(stack.back())];
      if (closing.condition && closing.children.empty()) {
        lp.fail("condition step '" + closing.id + "' has no branches");
      }
      stack.pop_back();
    }
    if (!stack.empty()) {
      const Node& parent = pool[static_cast<std::size_t>(stack.back())];
      if (!parent.condition) {
        lp.fail("step '" + id + "' nested under non-condition step '" + parent.id + "'");
      }
      if (id.size() <= parent.id.size() || id.compare(0, parent.id.size(), parent.id) != 0) {
        lp.fail("sub-step id '" + id + "' must extend parent id '" + parent.id + "'");
      }
    }
    if (!seen_ids.insert(id).second) lp.fail("duplicate step id '" + id + "'");

    Node node;
    node.id = id;
    node.text = text;
    node.source_lines = std::move(source_lines);
    node.condition = condition;
    node.level = level;
    node.physical = physical;
    int index = static_cast<int>(pool.size());
    pool.push_back(std::move(node));

    if (stack.empty()) {
      top.push_back(index);
    } else {
      pool[static_cast<std::size_t>(stack.back())].children.push_back(index);
    }
    stack.push_back(index);
    state = condition ? State::InBranch : State::ExpectStep;
  }
  (void)state;
  while (!stack.empty()) {
    const Node& closing = pool[static_cast<std::size_t>(stack.back())];
    if (closing.condition && closing.children.empty()) {
      throw DataError("protocol line " + std::to_string(closing.physical) +
                      ": condition step '" + closing.id + "' has no branches");
    }
    stack.pop_back();
  }

  ProtocolGraph g;
  for (const Node& n : pool) {
    ProtocolPhrase p;
    p.id = n.id;
    p.text = n.text;
    p.condition = n.condition;
    p.source_lines = n.source_lines;
    std::sort(p.source_lines.begin(), p.source_lines.end());
    p.source_lines.erase(std::unique(p.source_lines.begin(), p.source_lines.end()),
                         p.source_lines.end());
    g.phrases.push_back(std::move(p));
  }

  // tail(step): the step itself, or for a condition the tail of its last
  // branch, which is where control flow rejoins.
  auto tail = [&](auto&& self, int idx) -> std::string {
    const Node& n = pool[static_cast<std::size_t>(idx)];
    if (n.condition && !n.children.empty()) return self(self, n.children.back());
    return n.id;
  };
  auto emit_ifs = [&](auto&& self, int idx) -> void {
    const Node& n = pool[static_cast<std::size_t>(idx)];
    for (int child : n.children) {
      g.edges.push_back({n.id, pool[static_cast<std::size_t>(child)].id, RelationLabel::If});
      self(self, child);
    }
  };
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (i > 0) {
      g.edges.push_back({tail(tail, top[i - 1]),
                         pool[static_cast<std::size_t>(top[i])].id, RelationLabel::Next});
    }
    emit_ifs(emit_ifs, top[i]);
  }
  return g;
}

std::vector<std::string> validate_graph(const ProtocolGraph& g) {
  std::vector<std::string> out;
  std::map<std::string, int> count;
  for (const ProtocolPhrase& p : g.phrases) ++count[p.id];
  for (const auto& [id, n] : count) {
    if (n > 1) out.push_back("error: duplicate phrase id '" + id + "'");
  }
  for (const ProtocolEdge& e : g.edges) {
    for (const std::string& end : {e.src, e.dst}) {
      if (!count.count(end)) {
        out.push_back("error: edge references unknown phrase id '" + end + "'");
      }
    }
    if (e.src == e.dst) out.push_back("error: self-loop at '" + e.src + "'");
  }

  // Cycle check on the Next subgraph.
  std::map<std::string, std::vector<std::string>> next;
  for (const ProtocolEdge& e : g.edges) {
    if (e.label == RelationLabel::Next && count.count(e.src) && count.count(e.dst) &&
        e.src != e.dst) {
      next[e.src].push_back(e.dst);
    }
  }
  std::map<std::string, int> color;  // 0 unseen, 1 open, 2 done
  std::set<std::string> reported;
  auto dfs = [&](auto&& self, const std::string& u) -> void {
    color[u] = 1;
    for (const std::string& v : next[u]) {
      if (color[v] == 1) {
        if (reported.insert(v).second) {
          out.push_back("error: next-cycle involving '" + v + "'");
        }
      } else if (color[v] == 0) {
        self(self, v);
      }
    }
    color[u] = 2;
  };
  for (const ProtocolPhrase& p : g.phrases) {
    if (color[p.id] == 0) dfs(dfs, p.id);
  }

  for (const ProtocolPhrase& p : g.phrases) {
    if (p.source_lines.empty()) {
      out.push_back("warning: unanchored phrase '" + p.id + "' (no source lines)");
    }
  }
  return out;
}

}  // namespace pke
