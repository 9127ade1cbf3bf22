#include "cldrd/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

#include <spdlog/spdlog.h>

#include "cldrd/errors.hpp"
#include "cldrd/parallel.hpp"

namespace cldrd {

namespace {

std::vector<std::size_t> sample_positions(std::size_t begin, std::size_t size, std::size_t count,
                                          Rng& rng) {
  std::vector<std::size_t> pool(size);
  std::iota(pool.begin(), pool.end(), begin);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + rng.below(size - i)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

void IterationConfig::validate(std::size_t depth) const {
  if (group1_size == 0) throw ConfigError("group 1 must hold at least one document");
  if (group2_samples > group2_size) throw ConfigError("group 2 sample exceeds group 2 size");
  if (group3_samples > group3_size) throw ConfigError("group 3 sample exceeds group 3 size");
  if (pool_size() != depth) {
    throw ConfigError("group sizes sum to " + std::to_string(pool_size()) +
                      " but candidate depth is " + std::to_string(depth));
  }
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(peak_lr >= 0.0) || !std::isfinite(peak_lr)) throw ConfigError("peak_lr must be >= 0");
}

void CurriculumSchedule::validate() const {
  if (depth == 0) throw ConfigError("candidate depth must be positive");
  if (iterations.empty()) throw ConfigError("schedule needs at least one iteration");
  for (const auto& it : iterations) it.validate(depth);
}

std::vector<IterationConfig> CurriculumSchedule::execution_order() const {
  std::vector<IterationConfig> order = iterations;
  if (!reverse) return order;
  // Only the data difficulty is reversed; epochs and learning rate stay
  // attached to the position in the run.
  const std::size_t n = iterations.size();
  for (std::size_t i = 0; i < n; ++i) {
    const IterationConfig& src = iterations[n - 1 - i];
    order[i].group1_size = src.group1_size;
    order[i].group2_size = src.group2_size;
    order[i].group3_size = src.group3_size;
    order[i].group2_samples = src.group2_samples;
    order[i].group3_samples = src.group3_samples;
  }
  return order;
}

CurriculumSchedule CurriculumSchedule::standard(double lr_scale, std::size_t epochs) {
  CurriculumSchedule s;
  s.depth = 200;
  s.iterations = {
      {5, 45, 150, 12, 13, epochs, 7e-6 * lr_scale},
      {10, 40, 150, 10, 10, epochs, 3e-6 * lr_scale},
      {30, 20, 150, 0, 0, epochs, 3e-6 * lr_scale},
  };
  return s;
}

std::unordered_map<std::string, double> assign_pseudo_labels(const RankedList& teacher_ranked,
                                                             const IterationConfig& config) {
  if (teacher_ranked.size() < config.pool_size()) {
    throw DomainError("teacher list of " + std::to_string(teacher_ranked.size()) +
                      " is shorter than the " + std::to_string(config.pool_size()) +
                      " grouped ranks");
  }
  std::unordered_map<std::string, double> labels;
  const std::size_t g1_end = config.group1_size;
  const std::size_t g2_end = g1_end + config.group2_size;
  for (std::size_t i = 0; i < config.pool_size(); ++i) {
    const auto& e = teacher_ranked.entries[i];
    double label = -1.0;
    if (i < g1_end) {
      label = 1.0 / static_cast<double>(e.rank);
    } else if (i < g2_end) {
      label = 0.0;
    }
    labels.emplace(e.doc_id, label);
  }
  return labels;
}

GroupSample sample_groups(const RankedList& teacher_ranked, const IterationConfig& config,
                          Rng& rng) {
  if (config.group2_samples > config.group2_size || config.group3_samples > config.group3_size) {
    throw ConfigError("sample count exceeds its group");
  }
  if (teacher_ranked.size() < config.pool_size()) {
    throw DomainError("ranked list too short for the configured groups");
  }
  const auto& entries = teacher_ranked.entries;
  GroupSample out;
  for (std::size_t i = 0; i < config.group1_size; ++i) out.group1.push_back(entries[i].doc_id);
  for (auto pos : sample_positions(config.group1_size, config.group2_size,
                                   config.group2_samples, rng)) {
    out.group2.push_back(entries[pos].doc_id);
  }
  for (auto pos : sample_positions(config.group1_size + config.group2_size, config.group3_size,
                                   config.group3_samples, rng)) {
    out.group3.push_back(entries[pos].doc_id);
  }
  return out;
}

TrainingDataset generate_iteration_data(const IterationConfig& config, std::size_t depth,
                                        const GenerationInputs& in, std::uint64_t seed,
                                        int difficulty) {
  config.validate(depth);
  if (in.index.params_version() != in.params.version()) {
    throw ConfigError("index is stale: built from params version " +
                      std::to_string(in.index.params_version()) + ", current is " +
                      std::to_string(in.params.version()));
  }

  std::vector<std::optional<TrainingExample>> slots(in.queries.size());
  parallel_for(in.queries.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t qi = begin; qi < end; ++qi) {
      const Query& query = in.queries[qi];
      const auto tokens = tokenize(query.text, in.featurizer.max_query_tokens, in.featurizer);
      RankedList retrieved = search(in.index, encode(in.params, tokens, Role::query), depth);
      retrieved.query_id = query.id;
      if (retrieved.size() < depth) continue;

      std::unordered_map<std::string, std::size_t> retrieval_rank;
      for (const auto& e : retrieved.entries) retrieval_rank.emplace(e.doc_id, e.rank);

      const RankedList by_teacher = rerank(in.teacher, query, retrieved, in.corpus);
      const auto labels = assign_pseudo_labels(by_teacher, config);
      std::unordered_map<std::string, std::size_t> teacher_rank;
      for (const auto& e : by_teacher.entries) teacher_rank.emplace(e.doc_id, e.rank);

      Rng rng(derive_seed(seed, query.id));
      const GroupSample sample = sample_groups(by_teacher, config, rng);

      TrainingExample example{query.id, {}};
      example.docs.reserve(config.list_size());
      for (const auto* group : {&sample.group1, &sample.group2, &sample.group3}) {
        for (const auto& id : *group) {
          example.docs.push_back({id, labels.at(id), teacher_rank.at(id), retrieval_rank.at(id)});
        }
      }
      slots[qi] = std::move(example);
    }
  });

  TrainingDataset dataset;
  dataset.difficulty = difficulty;
  for (auto& slot : slots) {
    if (slot) {
      dataset.examples.push_back(std::move(*slot));
    } else {
      ++dataset.dropped_queries;
    }
  }
  if (dataset.dropped_queries > 0) {
    spdlog::warn("difficulty {}: dropped {} of {} queries with fewer than {} candidates",
                 difficulty, dataset.dropped_queries, in.queries.size(), depth);
  }
  return dataset;
}

void write_dataset(const TrainingDataset& dataset, std::ostream& out) {
  char label[32];
  for (const auto& ex : dataset.examples) {
    for (const auto& d : ex.docs) {
      std::snprintf(label, sizeof label, "%.6g", d.label);
      out << dataset.difficulty << '\t' << ex.query_id << '\t' << d.doc_id << '\t' << label
          << '\t' << d.teacher_rank << '\t' << d.retrieval_rank << '\n';
    }
  }
}

void write_dataset(const TrainingDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_dataset(dataset, out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace cldrd
