#ifndef PKE_COMMON_HPP
#define PKE_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pke {

/// Bad input data: malformed files, inconsistent records.  CLI maps this to exit 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller broke a documented precondition.  CLI maps this to exit 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Semantic validation failed (graph checks and the like).  CLI maps this to exit 3.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Deterministic RNG used everywhere seeds matter.  Wraps mt19937_64 and
/// avoids std::uniform_int_distribution / std::shuffle, whose outputs are
/// implementation defined; the sequences below are identical on every
/// platform for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Unbiased draw in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw UsageError("Rng::below: bound must be positive");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-a, a].
  double sym(double a) { return (2.0 * real01() - 1.0) * a; }

  /// Fisher-Yates shuffle, stable across platforms.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Pick one element.
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw UsageError("Rng::pick: empty vector");
    return v[static_cast<std::size_t>(below(v.size()))];
  }

 private:
  std::mt19937_64 gen_;
};

/// Per-epoch objective values recorded by the trainers.
struct TrainTrace {
  std::vector<double> epoch_loss;
};

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lower_copy(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens);

/// Read a whole file; throws DataError when the file cannot be opened.
std::string slurp_file(const std::string& path);

/// Write content to path via a temp file + rename so readers never observe
/// a half-written file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace pke

#endif
