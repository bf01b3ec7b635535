#include "pke/corpus.hpp"

#include <istream>
#include <sstream>

#include "pke/common.hpp"

namespace pke {
namespace {

bool is_word_byte(unsigned char c) {
  if (c >= 0x80) return true;  // keep UTF-8 continuation/lead bytes inside words
  return is_ascii_digit(static_cast<char>(c)) || is_ascii_alpha(static_cast<char>(c));
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      flush();
    } else if (is_word_byte(c)) {
      cur += static_cast<char>(c);
    } else if ((c == '-' || c == '\'') && !cur.empty() &&
               is_word_byte(static_cast<unsigned char>(cur.back())) &&
               i + 1 < text.size() &&
               is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
      cur += static_cast<char>(c);  // intra-word hyphen or apostrophe
    } else {
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  flush();
  return out;
}

const TranscriptLine* Transcript::line_by_no(int line_no) const {
  if (by_no_.empty() && !lines.empty()) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      by_no_[lines[i].line_no] = static_cast<int>(i);
    }
  }
  auto it = by_no_.find(line_no);
  if (it == by_no_.end()) return nullptr;
  return &lines[static_cast<std::size_t>(it->second)];
}

Transcript load_transcript(std::istream& in, const std::string& id) {
  Transcript t;
  t.id = id;
  std::string raw;
  int physical = 0;
  int prev_no = -1;
  while (std::getline(in, raw)) {
    ++physical;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t p = 0;
    while (p < raw.size() && is_space_byte(static_cast<unsigned char>(raw[p]))) ++p;
    if (p == raw.size()) continue;  // blank line

    auto fail = [&](const std::string& what) {
      throw DataError(id + " line " + std::to_string(physical) + ": " + what);
    };

    std::size_t d = p;
    while (d < raw.size() && is_ascii_digit(raw[d])) ++d;
    if (d == p) fail("expected line number");
    int line_no = 0;
    try {
      line_no = std::stoi(raw.substr(p, d - p));
    } catch (const std::exception&) {
      fail("line number out of range");
    }
    if (d >= raw.size() || raw[d] != ':') fail("expected ':' after line number");
    ++d;
    while (d < raw.size() && raw[d] == ' ') ++d;
    if (d >= raw.size() || raw[d] != '[') fail("expected '[speaker]'");
    std::size_t close = raw.find(']', d + 1);
    if (close == std::string::npos) fail("unterminated speaker bracket");
    std::string speaker = raw.substr(d + 1, close - d - 1);
    if (speaker.empty()) fail("empty speaker");
    std::size_t text_at = close + 1;
    if (text_at < raw.size() && raw[text_at] == ' ') ++text_at;

    if (line_no <= prev_no) fail("line numbers must be strictly increasing");
    prev_no = line_no;

    TranscriptLine line;
    line.line_no = line_no;
    line.speaker = std::move(speaker);
    line.tokens = tokenize(std::string_view(raw).substr(text_at));
    line.sent_index = static_cast<int>(t.lines.size());
    t.lines.push_back(std::move(line));
  }
  return t;
}

std::string render_transcript(const Transcript& t) {
  std::ostringstream out;
  for (const TranscriptLine& line : t.lines) {
    out << line.line_no << ": [" << line.speaker << "]";
    if (!line.tokens.empty()) out << ' ' << join_tokens(line.tokens);
    out << '\n';
  }
  return out.str();
}

std::vector<TextSpan> enumerate_spans(const TranscriptLine& line, int min_len, int max_len) {
  if (min_len < 1 || min_len > max_len) {
    throw UsageError("enumerate_spans: need 1 <= min_len <= max_len");
  }
  std::vector<TextSpan> out;
  int n = static_cast<int>(line.tokens.size());
  for (int start = 0; start < n; ++start) {
    int hi = std::min(n, start + max_len);
    for (int end = start + min_len; end <= hi; ++end) {
      out.push_back(TextSpan{line.sent_index, start, end});
    }
  }
  return out;
}

const TranscriptLine& span_line(const Transcript& t, const TextSpan& s) {
  if (s.sent_index < 0 || s.sent_index >= static_cast<int>(t.lines.size())) {
    throw UsageError("span sentence " + std::to_string(s.sent_index) + " out of range");
  }
  return t.lines[static_cast<std::size_t>(s.sent_index)];
}

std::string span_text(const Transcript& t, const TextSpan& s) {
  const TranscriptLine& line = span_line(t, s);
  if (s.start < 0 || s.end > static_cast<int>(line.tokens.size()) || s.start >= s.end) {
    throw UsageError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                     ") out of range in sentence " + std::to_string(s.sent_index));
  }
  std::string out;
  for (int i = s.start; i < s.end; ++i) {
    if (i > s.start) out += ' ';
    out += line.tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace pke
