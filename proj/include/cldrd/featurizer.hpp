#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cldrd {

/// Hashing featurizer settings. Token caps bound query and passage length.
struct FeaturizerConfig {
  std::size_t vocab_size = 32768;
  std::size_t max_query_tokens = 30;
  std::size_t max_doc_tokens = 256;

  /// Throws ConfigError when vocab_size < 2 or a cap is zero.
  void validate() const;
};

using TokenIds = std::vector<std::uint32_t>;
using Embedding = std::vector<double>;

enum class Role { query, document };

/// 64-bit FNV-1a over the raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercased words: maximal runs of ASCII alphanumerics or non-ASCII bytes.
std::vector<std::string> split_words(std::string_view text);

/// Bucket ids fnv1a64(word) % vocab_size for the first `cap` words.
TokenIds tokenize(std::string_view text, std::size_t cap, const FeaturizerConfig& config);

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Query and document embedding tables of the student. When shared, both
/// roles read and write the query table.
class EncoderParams {
 public:
  EncoderParams() = default;
  /// Zero-initialized tables.
  EncoderParams(std::size_t vocab_size, std::size_t dim, bool shared);

  /// I.i.d. uniform entries in [-1/sqrt(dim), 1/sqrt(dim)].
  static EncoderParams random(std::size_t vocab_size, std::size_t dim, bool shared,
                              std::uint64_t seed);

  std::size_t vocab_size() const { return query_.rows(); }
  std::size_t dim() const { return query_.cols(); }
  bool shared() const { return shared_; }

  Matrix& table(Role role) { return role == Role::document && !shared_ ? doc_ : query_; }
  const Matrix& table(Role role) const {
    return role == Role::document && !shared_ ? doc_ : query_;
  }

  /// Every distinct parameter block, for elementwise optimizers.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  /// Same layout, all zeros, version 0.
  EncoderParams zeros_like() const { return EncoderParams(vocab_size(), dim(), shared_); }

  bool same_shape(const EncoderParams& other) const {
    return vocab_size() == other.vocab_size() && dim() == other.dim() && shared_ == other.shared_;
  }

  void set_zero();
  bool all_finite() const;

  /// Stamp bumped on every parameter update; indexes record it.
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  /// Compares shape and values, ignoring the version stamp.
  bool same_values(const EncoderParams& other) const {
    return shared_ == other.shared_ && query_ == other.query_ && doc_ == other.doc_;
  }

 private:
  Matrix query_;
  Matrix doc_;
  bool shared_ = false;
  std::uint64_t version_ = 0;
};

/// Mean of the role's embedding rows for `ids`; zeros for an empty sequence.
/// Throws BoundsError on an id >= vocab_size.
Embedding encode(const EncoderParams& params, std::span<const std::uint32_t> ids, Role role);

/// Inner product. Throws ShapeError on a length mismatch.
double score(std::span<const double> q_vec, std::span<const double> d_vec);

/// Adds upstream * d score(q, d) / d row into `grad` for every row used by
/// the query and the document.
void accumulate_score_gradient(const EncoderParams& params, std::span<const std::uint32_t> q_ids,
                               std::span<const std::uint32_t> d_ids, double upstream,
                               EncoderParams& grad);

/// Same as above with the pooled vectors already computed.
void accumulate_score_gradient(std::span<const std::uint32_t> q_ids,
                               std::span<const double> q_vec,
                               std::span<const std::uint32_t> d_ids,
                               std::span<const double> d_vec, double upstream,
                               EncoderParams& grad);

/// Binary checkpoint: "CLDRD1", u32 vocab_size, u32 dim, u8 shared, then the
/// query table and (unless shared) the document table as little-endian
/// float32, row-major.
void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_checkpoint(const std::filesystem::path& path);

}  // namespace cldrd
