#ifndef PKE_CORPUS_HPP
#define PKE_CORPUS_HPP

#include <compare>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pke {

/// Token range [start, end) inside one sentence of a transcript.
struct TextSpan {
  int sent_index = 0;
  int start = 0;
  int end = 0;

  auto operator<=>(const TextSpan&) const = default;
  int length() const { return end - start; }
};

struct TranscriptLine {
  int line_no = 0;        // number printed in the source file, gaps allowed
  std::string speaker;
  std::vector<std::string> tokens;
  int sent_index = 0;     // dense 0-based position within the transcript
};

struct Transcript {
  std::string id;
  std::vector<TranscriptLine> lines;

  /// Lookup by printed line number; nullptr when absent.
  const TranscriptLine* line_by_no(int line_no) const;

 private:
  friend Transcript load_transcript(std::istream& in, const std::string& id);
  mutable std::map<int, int> by_no_;  // built lazily from lines
};

/// Split raw text into tokens.  Runs of letters, digits and non-ASCII bytes
/// form words; '-' and '\'' stay inside a word when both neighbours are word
/// characters ("Luer-lock", "don't"); every other printable character is its
/// own token.
std::vector<std::string> tokenize(std::string_view text);

/// Parse the "<line_no>: [<speaker>] <text>" transcript format.  Blank lines
/// are skipped; printed line numbers must be strictly increasing.
Transcript load_transcript(std::istream& in, const std::string& id);

/// Inverse of load_transcript up to token boundaries: emits one line per
/// sentence with tokens joined by single spaces.
std::string render_transcript(const Transcript& t);

/// Candidate spans of a sentence, lengths in [min_len, max_len], ordered by
/// (start, end).
std::vector<TextSpan> enumerate_spans(const TranscriptLine& line, int min_len, int max_len);

/// Tokens covered by the span, joined by single spaces.
std::string span_text(const Transcript& t, const TextSpan& s);

/// The sentence holding the span; throws UsageError when out of range.
const TranscriptLine& span_line(const Transcript& t, const TextSpan& s);

}  // namespace pke

#endif
