#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cldrd/data_model.hpp"

namespace cldrd {

/// Seeded synthetic retrieval world.
///
/// Topics sit on a ring. Every topic owns a disjoint vocabulary; a shared
/// background vocabulary is common to all. Documents draw words from their own
/// topic, from the two adjacent topics and from the background; queries draw
/// from their topic and the background. All vocabularies are Zipfian.
/// grade(q, d) = max(0, grade_levels - 1 - ring distance of their topics).
struct SynthConfig {
  std::size_t num_topics = 50;
  std::size_t docs_per_topic = 200;
  std::size_t vocab_per_topic = 60;
  std::size_t shared_vocab = 2000;
  std::size_t num_train_queries = 500;
  std::size_t num_eval_queries = 100;
  std::size_t doc_length = 40;
  std::size_t query_length = 5;
  int grade_levels = 4;
  std::uint64_t seed = 0;

  /// Off-topic documents judged per eval query, besides all same-topic ones.
  std::size_t judged_others = 100;
  double doc_topic_weight = 0.35;
  double doc_neighbor_weight = 0.15;
  double query_topic_weight = 0.6;
  double zipf_exponent = 1.0;

  /// Throws ConfigError on zero counts, grade_levels < 2 or weights outside [0, 1].
  void validate() const;
};

struct SynthWorld {
  Corpus corpus;
  QuerySet train_queries;
  QuerySet eval_queries;
  /// Eval-query judgments over the judged pool.
  Qrels eval_qrels;
  /// Every positive grade, for train and eval queries.
  Qrels oracle_grades;
  std::vector<std::size_t> doc_topics;
  std::vector<std::size_t> train_topics;
  std::vector<std::size_t> eval_topics;
};

std::size_t ring_distance(std::size_t a, std::size_t b, std::size_t num_topics);

SynthWorld generate_world(const SynthConfig& config);

/// collection.tsv, queries.train.tsv, queries.eval.tsv, qrels.eval.txt and
/// oracle.grades.txt under `dir` (created if missing).
void write_world(const SynthWorld& world, const std::filesystem::path& dir);

}  // namespace cldrd
