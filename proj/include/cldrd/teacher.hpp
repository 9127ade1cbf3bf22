#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "cldrd/data_model.hpp"

namespace cldrd {

/// Re-ranking teacher: scores a (query, document) pair.
class Teacher {
 public:
  virtual ~Teacher() = default;

  virtual double score(const Query& query, const Document& doc) const = 0;
  virtual std::string_view kind() const = 0;

  /// False when scoring uses ids only, so candidates need not be in a corpus.
  virtual bool needs_text() const { return true; }
};

/// Grade lookup plus per-pair deterministic Gaussian noise. Unjudged pairs
/// have grade 0.
class OracleTeacher final : public Teacher {
 public:
  OracleTeacher(Qrels grades, double noise_scale, std::uint64_t seed);

  double score(const Query& query, const Document& doc) const override;
  std::string_view kind() const override { return "oracle"; }
  bool needs_text() const override { return false; }

  /// The noise draw for a pair, before scaling.
  double noise(std::string_view query_id, std::string_view doc_id) const;

 private:
  Qrels grades_;
  double noise_scale_;
  std::uint64_t seed_;
};

/// Precomputed scores, e.g. exported from an external cross-encoder.
class FileTeacher final : public Teacher {
 public:
  using Key = std::pair<std::string, std::string>;

  FileTeacher() = default;

  /// Throws IntegrityError on a duplicate (qid, docid).
  void add(const std::string& query_id, const std::string& doc_id, double score);

  /// Reads `qid<TAB>docid<TAB>score` lines.
  static FileTeacher load(const std::filesystem::path& path);

  double score(const Query& query, const Document& doc) const override;
  std::string_view kind() const override { return "file"; }
  bool needs_text() const override { return false; }

  std::size_t size() const { return scores_.size(); }

 private:
  std::map<Key, double> scores_;
};

/// Okapi BM25 over the corpus word statistics.
class LexicalTeacher final : public Teacher {
 public:
  explicit LexicalTeacher(const Corpus& corpus, double k1 = 0.9, double b = 0.4);

  double score(const Query& query, const Document& doc) const override;
  std::string_view kind() const override { return "lexical"; }

  /// ln((N - df + 0.5) / (df + 0.5) + 1).
  double idf(std::string_view word) const;

 private:
  double k1_;
  double b_;
  double doc_count_ = 0.0;
  double avg_length_ = 0.0;
  std::unordered_map<std::string, std::size_t> doc_freq_;
};

/// Reorders candidates by descending teacher score (ties by ascending doc
/// id) and renumbers ranks. Throws LookupError for a candidate missing from
/// the corpus when the teacher needs text.
RankedList rerank(const Teacher& teacher, const Query& query, const RankedList& candidates,
                  const Corpus& corpus);

}  // namespace cldrd
