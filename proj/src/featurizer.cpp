#include "cldrd/featurizer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cldrd/errors.hpp"
#include "cldrd/rng.hpp"

namespace cldrd {

namespace {

constexpr char kCheckpointMagic[] = "CLDRD1";
constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("truncated checkpoint");
  return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
         static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

void write_floats(std::ostream& out, std::span<const double> values) {
  std::vector<char> buffer(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) buffer[i * 4 + b] = static_cast<char>(bits >> (8 * b));
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

void read_floats(std::istream& in, std::span<double> values) {
  std::vector<unsigned char> buffer(values.size() * 4);
  if (!in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()))) {
    throw IoError("truncated checkpoint");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buffer[i * 4 + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
}

void check_ids(std::span<const std::uint32_t> ids, std::size_t vocab_size) {
  for (auto id : ids) {
    if (id >= vocab_size) {
      throw BoundsError("token id " + std::to_string(id) + " >= vocab size " +
                        std::to_string(vocab_size));
    }
  }
}

void scatter_pooled(std::span<const std::uint32_t> ids, std::span<const double> other,
                    double upstream, Matrix& grad) {
  if (ids.empty() || upstream == 0.0) return;
  // Each occurrence contributes upstream / |ids| times the other vector, so a
  // row used k times receives k / |ids| in total.
  const double factor = upstream / static_cast<double>(ids.size());
  for (auto id : ids) {
    auto row = grad.row(id);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += factor * other[c];
  }
}

}  // namespace

void FeaturizerConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (vocab_size > UINT32_MAX) throw ConfigError("vocab_size exceeds 32-bit ids");
  if (max_query_tokens < 1 || max_doc_tokens < 1) throw ConfigError("token caps must be >= 1");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

TokenIds tokenize(std::string_view text, std::size_t cap, const FeaturizerConfig& config) {
  TokenIds ids;
  for (const auto& word : split_words(text)) {
    if (ids.size() >= cap) break;
    ids.push_back(static_cast<std::uint32_t>(fnv1a64(word) % config.vocab_size));
  }
  return ids;
}

EncoderParams::EncoderParams(std::size_t vocab_size, std::size_t dim, bool shared)
    : query_(vocab_size, dim), doc_(shared ? 0 : vocab_size, shared ? 0 : dim), shared_(shared) {
  if (vocab_size < 2 || dim < 1) throw ConfigError("encoder needs vocab_size >= 2 and dim >= 1");
}

EncoderParams EncoderParams::random(std::size_t vocab_size, std::size_t dim, bool shared,
                                    std::uint64_t seed) {
  EncoderParams params(vocab_size, dim, shared);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto block : params.blocks()) {
    for (auto& v : block) v = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return params;
}

std::vector<std::span<double>> EncoderParams::blocks() {
  if (shared_) return {query_.flat()};
  return {query_.flat(), doc_.flat()};
}

std::vector<std::span<const double>> EncoderParams::blocks() const {
  if (shared_) return {query_.flat()};
  return {query_.flat(), doc_.flat()};
}

void EncoderParams::set_zero() {
  for (auto block : blocks()) std::fill(block.begin(), block.end(), 0.0);
}

bool EncoderParams::all_finite() const {
  for (auto block : blocks()) {
    for (double v : block) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Embedding encode(const EncoderParams& params, std::span<const std::uint32_t> ids, Role role) {
  check_ids(ids, params.vocab_size());
  Embedding out(params.dim(), 0.0);
  if (ids.empty()) return out;
  const Matrix& table = params.table(role);
  for (auto id : ids) {
    auto row = table.row(id);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (auto& v : out) v *= inv;
  return out;
}

double score(std::span<const double> q_vec, std::span<const double> d_vec) {
  if (q_vec.size() != d_vec.size()) {
    throw ShapeError("score: lengths " + std::to_string(q_vec.size()) + " and " +
                     std::to_string(d_vec.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < q_vec.size(); ++i) sum += q_vec[i] * d_vec[i];
  return sum;
}

void accumulate_score_gradient(const EncoderParams& params, std::span<const std::uint32_t> q_ids,
                               std::span<const std::uint32_t> d_ids, double upstream,
                               EncoderParams& grad) {
  if (!params.same_shape(grad)) throw ShapeError("gradient buffer shape differs from params");
  const Embedding q_vec = encode(params, q_ids, Role::query);
  const Embedding d_vec = encode(params, d_ids, Role::document);
  accumulate_score_gradient(q_ids, q_vec, d_ids, d_vec, upstream, grad);
}

void accumulate_score_gradient(std::span<const std::uint32_t> q_ids,
                               std::span<const double> q_vec,
                               std::span<const std::uint32_t> d_ids,
                               std::span<const double> d_vec, double upstream,
                               EncoderParams& grad) {
  if (q_vec.size() != grad.dim() || d_vec.size() != grad.dim()) {
    throw ShapeError("embedding length differs from gradient dim");
  }
  check_ids(q_ids, grad.vocab_size());
  check_ids(d_ids, grad.vocab_size());
  scatter_pooled(q_ids, d_vec, upstream, grad.table(Role::query));
  scatter_pooled(d_ids, q_vec, upstream, grad.table(Role::document));
}

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kCheckpointMagic, kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(params.vocab_size()));
  put_u32(out, static_cast<std::uint32_t>(params.dim()));
  out.put(params.shared() ? 1 : 0);
  for (auto block : params.blocks()) write_floats(out, block);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kCheckpointMagic, kMagicSize) != 0) {
    throw IoError("'" + path.string() + "' is not a checkpoint");
  }
  const std::uint32_t vocab_size = get_u32(in);
  const std::uint32_t dim = get_u32(in);
  const int shared = in.get();
  if (shared != 0 && shared != 1) throw IoError("bad shared flag in checkpoint");
  EncoderParams params(vocab_size, dim, shared == 1);
  for (auto block : params.blocks()) read_floats(in, block);
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint");
  if (!params.all_finite()) throw IoError("non-finite value in checkpoint");
  return params;
}

}  // namespace cldrd
