#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cldrd/curriculum.hpp"
#include "cldrd/data_model.hpp"
#include "cldrd/featurizer.hpp"
#include "cldrd/teacher.hpp"

namespace cldrd {

/// Bias-corrected Adam moments shaped like the parameters.
struct AdamState {
  EncoderParams first_moment;
  EncoderParams second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Per block, rows that have ever received a non-zero gradient. Inactive
  /// rows have zero moments and a zero gradient, so their update is exactly
  /// zero and is skipped.
  std::vector<std::vector<char>> active_rows;

  explicit AdamState(const EncoderParams& like);
};

/// Linear warmup from 0 to the peak, then linear decay to 0 at total_steps.
struct LrSchedule {
  std::size_t warmup_steps = 4000;
  std::size_t total_steps = 1;
  double peak_lr = 0.0;
};

/// Throws DomainError when step > total_steps.
double lr_at(std::size_t step, const LrSchedule& schedule);

/// One Adam update. Throws NumericError (params untouched) when a gradient
/// entry is not finite, or when the update produces a non-finite parameter.
void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state, double lr);

struct TrainerOptions {
  FeaturizerConfig featurizer;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  /// Per-iteration warmup; unset means min(4000, total_steps / 10).
  std::optional<std::size_t> warmup_steps;
};

struct Validation {
  const QuerySet& queries;
  const Qrels& qrels;
  int rel_threshold = 1;
};

struct IterationMetrics {
  int delta = 0;
  std::size_t group1_size = 0;
  std::size_t steps = 0;
  std::size_t examples = 0;
  std::size_t dropped_queries = 0;
  double train_loss_mean = 0.0;
  std::optional<double> val_mrr10;
};

/// Called after every curriculum iteration with the updated parameters.
using IterationHook = std::function<void(const IterationMetrics&, const EncoderParams&,
                                         const TrainingDataset&)>;

struct TrainingResult {
  EncoderParams params;
  std::vector<IterationMetrics> log;
  std::optional<double> initial_val_mrr10;
  std::size_t total_steps = 0;
};

/// MRR@10 of the student on a validation set.
double validation_mrr10(const EncoderParams& params, const Corpus& corpus,
                        const Validation& validation, const FeaturizerConfig& featurizer);

/// Mean per-query loss of a dataset under the current parameters.
double dataset_loss(const EncoderParams& params, const TrainingDataset& dataset,
                    const QuerySet& queries, const Corpus& corpus,
                    const FeaturizerConfig& featurizer);

/// Runs the curriculum: for each level, rebuild the index from the current
/// student, regenerate that level's training data and train for its epochs
/// with Adam on a per-level warmup/decay schedule.
TrainingResult run_curriculum(const CurriculumSchedule& schedule, EncoderParams init,
                              const Teacher& teacher, const QuerySet& queries,
                              const Corpus& corpus, const TrainerOptions& options,
                              const std::optional<Validation>& validation = std::nullopt,
                              const IterationHook& on_iteration = {});

}  // namespace cldrd
