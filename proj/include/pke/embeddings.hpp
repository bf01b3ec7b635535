#ifndef PKE_EMBEDDINGS_HPP
#define PKE_EMBEDDINGS_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pke {

using Vector = std::vector<double>;

/// Word vectors in the usual text format: one token per line followed by
/// `dim` numbers.  Tokens are lowercased on load and on lookup; when a file
/// repeats a token the first row wins.
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Vector> rows;

  const Vector* find(std::string_view token) const;
  std::size_t size() const { return rows.size(); }
};

EmbeddingTable load_embeddings(std::istream& in);

struct PhraseEmbedding {
  Vector vec;     // average of the known token vectors; zeros when none known
  int known = 0;  // tokens found in the table
  int oov = 0;    // tokens skipped
};

/// Mean of the embeddings of the known tokens.  Unknown tokens are skipped;
/// a phrase with no known token yields the zero vector.
PhraseEmbedding embed_phrase(const std::vector<std::string>& tokens,
                             const EmbeddingTable& table);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(const Vector& a, const Vector& b);

}  // namespace pke

#endif
