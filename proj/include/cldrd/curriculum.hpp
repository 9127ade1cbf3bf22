#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "cldrd/data_model.hpp"
#include "cldrd/dense_index.hpp"
#include "cldrd/featurizer.hpp"
#include "cldrd/rng.hpp"
#include "cldrd/teacher.hpp"

namespace cldrd {

/// Knobs for one difficulty level.
///
/// The teacher's re-ranked candidate pool is cut into three consecutive
/// groups: the pseudo-relevant head (group 1), hard negatives (group 2) and
/// the remainder (group 3). Group 1 is kept whole; groups 2 and 3 are
/// subsampled, so every training list has
/// group1_size + group2_samples + group3_samples documents.
struct IterationConfig {
  std::size_t group1_size = 0;
  std::size_t group2_size = 0;
  std::size_t group3_size = 0;
  std::size_t group2_samples = 0;
  std::size_t group3_samples = 0;
  std::size_t epochs = 3;
  double peak_lr = 0.0;

  std::size_t list_size() const { return group1_size + group2_samples + group3_samples; }
  std::size_t pool_size() const { return group1_size + group2_size + group3_size; }

  /// Throws ConfigError unless the groups tile `depth` and the sample counts
  /// fit their groups.
  void validate(std::size_t depth) const;
};

struct CurriculumSchedule {
  std::size_t depth = 200;
  std::vector<IterationConfig> iterations;
  bool reverse = false;

  void validate() const;

  /// Iterations in execution order. Reversal swaps the group and sample
  /// knobs end to end; epochs and peak_lr keep their positions.
  std::vector<IterationConfig> execution_order() const;

  /// Three levels: group 1 of 5/10/30, group 2 of 45/40/20, group 3 of 150,
  /// sampling 12/10/0 and 13/10/0 for a list of 30. Base peak learning rates
  /// 7e-6, 3e-6, 3e-6 are multiplied by lr_scale.
  static CurriculumSchedule standard(double lr_scale = 1.0, std::size_t epochs = 3);
};

struct TrainingDoc {
  std::string doc_id;
  double label = 0.0;
  std::size_t teacher_rank = 0;
  std::size_t retrieval_rank = 0;
};

struct TrainingExample {
  std::string query_id;
  std::vector<TrainingDoc> docs;
};

struct TrainingDataset {
  int difficulty = 1;
  std::vector<TrainingExample> examples;
  std::size_t dropped_queries = 0;
};

/// doc id -> pseudo-label over the first pool_size() teacher ranks:
/// 1/r inside group 1, 0 in group 2, -1 in group 3.
std::unordered_map<std::string, double> assign_pseudo_labels(const RankedList& teacher_ranked,
                                                             const IterationConfig& config);

struct GroupSample {
  std::vector<std::string> group1;
  std::vector<std::string> group2;
  std::vector<std::string> group3;
};

/// Keeps group 1 whole and draws the group 2/3 samples uniformly without
/// replacement. Sampled ids stay in teacher order.
GroupSample sample_groups(const RankedList& teacher_ranked, const IterationConfig& config,
                          Rng& rng);

/// Everything needed to materialize one difficulty level's training data.
struct GenerationInputs {
  const EncoderParams& params;
  const DenseIndex& index;
  const FeaturizerConfig& featurizer;
  const Teacher& teacher;
  const QuerySet& queries;
  const Corpus& corpus;
};

/// Student retrieval of `depth` candidates, teacher re-ranking, grouping,
/// sampling and labelling for every query. Queries with fewer than `depth`
/// candidates are dropped and counted. The index must be built from the
/// current params.
TrainingDataset generate_iteration_data(const IterationConfig& config, std::size_t depth,
                                        const GenerationInputs& inputs, std::uint64_t seed,
                                        int difficulty);

/// `delta<TAB>qid<TAB>docid<TAB>label<TAB>teacher_rank<TAB>retrieval_rank`,
/// labels with 6 significant digits.
void write_dataset(const TrainingDataset& dataset, std::ostream& out);
void write_dataset(const TrainingDataset& dataset, const std::filesystem::path& path);

}  // namespace cldrd
