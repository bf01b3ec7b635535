#include "pke/embeddings.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include "pke/common.hpp"

namespace pke {

const Vector* EmbeddingTable::find(std::string_view token) const {
  auto it = rows.find(lower_copy(token));
  if (it == rows.end()) return nullptr;
  return &it->second;
}

EmbeddingTable load_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  int physical = 0;
  while (std::getline(in, line)) {
    ++physical;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    if (token.empty()) continue;
    Vector vec;
    double x;
    while (ss >> x) vec.push_back(x);
    if (!ss.eof()) {
      throw DataError("embeddings line " + std::to_string(physical) + ": bad number");
    }
    if (vec.empty()) {
      throw DataError("embeddings line " + std::to_string(physical) + ": no values");
    }
    if (table.dim == 0) {
      table.dim = static_cast<int>(vec.size());
    } else if (static_cast<int>(vec.size()) != table.dim) {
      throw DataError("embeddings line " + std::to_string(physical) + ": expected " +
                      std::to_string(table.dim) + " values, got " +
                      std::to_string(vec.size()));
    }
    table.rows.emplace(lower_copy(token), std::move(vec));  // first row wins
  }
  if (table.rows.empty()) throw DataError("embeddings: no vectors in input");
  return table;
}

PhraseEmbedding embed_phrase(const std::vector<std::string>& tokens,
                             const EmbeddingTable& table) {
  if (tokens.empty()) throw UsageError("embed_phrase: empty token list");
  PhraseEmbedding out;
  out.vec.assign(static_cast<std::size_t>(table.dim), 0.0);
  for (const std::string& tok : tokens) {
    const Vector* row = table.find(tok);
    if (!row) {
      ++out.oov;
      continue;
    }
    ++out.known;
    for (std::size_t i = 0; i < row->size(); ++i) out.vec[i] += (*row)[i];
  }
  if (out.known > 0) {
    for (double& v : out.vec) v /= out.known;
  }
  return out;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw UsageError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double cosine(const Vector& a, const Vector& b) {
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace pke
