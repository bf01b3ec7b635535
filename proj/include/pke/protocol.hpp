#ifndef PKE_PROTOCOL_HPP
#define PKE_PROTOCOL_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace pke {

enum class RelationLabel { None = 0, Next = 1, If = 2 };

const char* relation_name(RelationLabel label);              // "none" / "next" / "if"
RelationLabel relation_from_name(const std::string& name);   // throws DataError

/// One step of a written protocol.
struct ProtocolPhrase {
  std::string id;
  std::string text;              // step text without annotation or trailing ':'
  std::vector<int> source_lines; // transcript line numbers, sorted, may be empty
  bool condition = false;
};

struct ProtocolEdge {
  std::string src;
  std::string dst;
  RelationLabel label = RelationLabel::None;
};

struct ProtocolGraph {
  std::vector<ProtocolPhrase> phrases;
  std::vector<ProtocolEdge> edges;

  const ProtocolPhrase* phrase(const std::string& id) const;
};

/// Parse the indented step format:
///
///   1. flush the line (line 12)
///   2. if resistance is felt (lines 14-15):
///     2a. stop and reposition (line 16)
///     2b. withdraw the wire (line 18)
///   3. advance the catheter (line 20)
///
/// Two spaces per indent level.  A step ending in ':' must start with "if"
/// and opens a branch block one level deeper; every branch receives an If
/// edge from its condition.  Consecutive top-level steps are joined by Next
/// edges; when the earlier step is a condition, the edge leaves the tail of
/// its last branch, so control flow continues after the branch block.
/// Sub-step ids must extend the parent id ("2a" under "2").  Malformed
/// input throws DataError with the offending physical line.
ProtocolGraph parse_protocol(std::istream& in);

/// Structural checks on a graph (typically one loaded from JSON rather than
/// produced by parse_protocol).  Returns diagnostics; strings starting with
/// "error:" are fatal, "warning:" are advisory.
std::vector<std::string> validate_graph(const ProtocolGraph& g);

}  // namespace pke

#endif
