#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cldrd/data_model.hpp"
#include "cldrd/featurizer.hpp"

namespace cldrd {

/// Document vectors of one encoder state, searched exhaustively.
class DenseIndex {
 public:
  DenseIndex() = default;
  DenseIndex(std::vector<std::string> doc_ids, Matrix vectors, std::uint64_t params_version);

  std::size_t size() const { return doc_ids_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const Matrix& vectors() const { return vectors_; }
  std::uint64_t params_version() const { return params_version_; }

  bool operator==(const DenseIndex&) const = default;

 private:
  std::vector<std::string> doc_ids_;
  Matrix vectors_;
  std::uint64_t params_version_ = 0;
};

/// Encodes every document in corpus order with the document encoder.
DenseIndex build_index(const EncoderParams& params, const Corpus& corpus,
                       const FeaturizerConfig& config);

/// Top min(k, size) documents by descending inner product, ties by ascending
/// doc id. The returned list has an empty query id.
RankedList search(const DenseIndex& index, std::span<const double> q_vec, std::size_t k);

/// Encodes and searches every query; output follows query order.
std::vector<RankedList> search_all(const DenseIndex& index, const EncoderParams& params,
                                   const QuerySet& queries, const FeaturizerConfig& config,
                                   std::size_t k);

/// "CLDRDIX1", u32 num_docs, u32 dim, u64 params_version, then per doc a u32
/// length and the id bytes, then the float32 row-major matrix (little-endian).
void save_index(const DenseIndex& index, const std::filesystem::path& path);
DenseIndex load_index(const std::filesystem::path& path);

}  // namespace cldrd
