#include "cldrd/dense_index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "cldrd/errors.hpp"
#include "cldrd/parallel.hpp"

namespace cldrd {

namespace {

constexpr char kIndexMagic[] = "CLDRDIX1";
constexpr std::size_t kMagicSize = sizeof(kIndexMagic) - 1;

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.put(static_cast<char>(v >> (8 * b)));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("truncated index file");
    v |= static_cast<std::uint64_t>(c) << (8 * b);
  }
  return v;
}

}  // namespace

DenseIndex::DenseIndex(std::vector<std::string> doc_ids, Matrix vectors,
                       std::uint64_t params_version)
    : doc_ids_(std::move(doc_ids)), vectors_(std::move(vectors)), params_version_(params_version) {
  if (vectors_.rows() != doc_ids_.size()) throw ShapeError("index rows differ from doc id count");
}

DenseIndex build_index(const EncoderParams& params, const Corpus& corpus,
                       const FeaturizerConfig& config) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& doc : corpus) ids.push_back(doc.id);
  Matrix vectors(corpus.size(), params.dim());
  parallel_for(corpus.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto tokens = tokenize(corpus[i].text, config.max_doc_tokens, config);
      const auto vec = encode(params, tokens, Role::document);
      std::copy(vec.begin(), vec.end(), vectors.row(i).begin());
    }
  });
  return DenseIndex(std::move(ids), std::move(vectors), params.version());
}

RankedList search(const DenseIndex& index, std::span<const double> q_vec, std::size_t k) {
  if (k == 0) throw DomainError("search: k must be >= 1");
  if (q_vec.size() != index.dim() && index.size() > 0) {
    throw ShapeError("search: query length differs from index dim");
  }
  const std::size_t n = index.size();
  std::vector<double> scores(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) scores[i] = score(q_vec, index.vectors().row(i));
  });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& ids = index.doc_ids();
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  const std::size_t take = std::min(k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    before);

  RankedList out;
  out.entries.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    out.entries.push_back({ids[order[r]], scores[order[r]], r + 1});
  }
  return out;
}

std::vector<RankedList> search_all(const DenseIndex& index, const EncoderParams& params,
                                   const QuerySet& queries, const FeaturizerConfig& config,
                                   std::size_t k) {
  std::vector<RankedList> run;
  run.reserve(queries.size());
  for (const auto& q : queries) {
    const auto tokens = tokenize(q.text, config.max_query_tokens, config);
    RankedList list = search(index, encode(params, tokens, Role::query), k);
    list.query_id = q.id;
    run.push_back(std::move(list));
  }
  return run;
}

void save_index(const DenseIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kIndexMagic, kMagicSize);
  put_le(out, index.size(), 4);
  put_le(out, index.dim(), 4);
  put_le(out, index.params_version(), 8);
  for (const auto& id : index.doc_ids()) {
    put_le(out, id.size(), 4);
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (double v : index.vectors().flat()) {
    put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

DenseIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kIndexMagic, kMagicSize) != 0) {
    throw IoError("'" + path.string() + "' is not an index dump");
  }
  const auto n = static_cast<std::size_t>(get_le(in, 4));
  const auto dim = static_cast<std::size_t>(get_le(in, 4));
  const auto version = get_le(in, 8);
  std::vector<std::string> ids(n);
  for (auto& id : ids) {
    id.resize(static_cast<std::size_t>(get_le(in, 4)));
    if (!in.read(id.data(), static_cast<std::streamsize>(id.size()))) {
      throw IoError("truncated index file");
    }
  }
  Matrix vectors(n, dim);
  for (auto& v : vectors.flat()) {
    v = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(in, 4)));
  }
  return DenseIndex(std::move(ids), std::move(vectors), version);
}

}  // namespace cldrd
