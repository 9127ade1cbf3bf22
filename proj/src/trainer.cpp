#include "cldrd/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "cldrd/dense_index.hpp"
#include "cldrd/errors.hpp"
#include "cldrd/eval.hpp"
#include "cldrd/kd_loss.hpp"
#include "cldrd/parallel.hpp"
#include "cldrd/rng.hpp"

namespace cldrd {

namespace {

/// Token ids of every corpus document, computed once per run.
std::vector<TokenIds> tokenize_corpus(const Corpus& corpus, const FeaturizerConfig& featurizer) {
  std::vector<TokenIds> out(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = tokenize(corpus[i].text, featurizer.max_doc_tokens, featurizer);
    }
  });
  return out;
}

/// A training example resolved to token ids and precomputed pairs.
struct PreparedExample {
  TokenIds query_tokens;
  std::vector<const TokenIds*> doc_tokens;
  PairSet pairs;
};

std::vector<PreparedExample> prepare(const TrainingDataset& dataset, const QuerySet& queries,
                                     const Corpus& corpus, const std::vector<TokenIds>& doc_tokens,
                                     const FeaturizerConfig& featurizer) {
  std::vector<PreparedExample> out;
  out.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    PreparedExample p;
    p.query_tokens = tokenize(queries.at(ex.query_id).text, featurizer.max_query_tokens, featurizer);
    for (const auto& d : ex.docs) {
      const auto pos = corpus.position(d.doc_id);
      if (!pos) throw LookupError("training doc '" + d.doc_id + "' not in corpus");
      p.doc_tokens.push_back(&doc_tokens[*pos]);
    }
    p.pairs = enumerate_pairs(ex);
    out.push_back(std::move(p));
  }
  return out;
}

/// Loss of one example; when `grad` is set, also adds scale * d loss / d params.
double example_loss(const EncoderParams& params, const PreparedExample& ex, double scale,
                    EncoderParams* grad) {
  const Embedding q_vec = encode(params, ex.query_tokens, Role::query);
  std::vector<Embedding> d_vecs;
  std::vector<double> scores;
  d_vecs.reserve(ex.doc_tokens.size());
  for (const auto* tokens : ex.doc_tokens) {
    d_vecs.push_back(encode(params, *tokens, Role::document));
    scores.push_back(score(q_vec, d_vecs.back()));
  }
  const double loss = kd_loss(scores, ex.pairs);
  if (grad != nullptr) {
    const auto score_grad = kd_loss_grad(scores, ex.pairs);
    for (std::size_t i = 0; i < ex.doc_tokens.size(); ++i) {
      accumulate_score_gradient(ex.query_tokens, q_vec, *ex.doc_tokens[i], d_vecs[i],
                                scale * score_grad[i], *grad);
    }
  }
  return loss;
}

/// Zeroes the gradient rows an example can have touched.
void clear_rows(EncoderParams& grad, const PreparedExample& ex) {
  auto clear = [](Matrix& table, const TokenIds& ids) {
    for (auto id : ids) {
      auto row = table.row(id);
      std::fill(row.begin(), row.end(), 0.0);
    }
  };
  clear(grad.table(Role::query), ex.query_tokens);
  for (const auto* tokens : ex.doc_tokens) clear(grad.table(Role::document), *tokens);
}

std::size_t default_warmup(std::size_t total_steps) {
  return std::min<std::size_t>(4000, total_steps / 10);
}

}  // namespace

double lr_at(std::size_t step, const LrSchedule& s) {
  if (step > s.total_steps) {
    throw DomainError("step " + std::to_string(step) + " beyond total " +
                      std::to_string(s.total_steps));
  }
  if (s.warmup_steps > s.total_steps) throw DomainError("warmup longer than schedule");
  if (step < s.warmup_steps) {
    return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  const std::size_t decay = s.total_steps - s.warmup_steps;
  if (decay == 0) return s.peak_lr;
  return s.peak_lr * static_cast<double>(s.total_steps - step) / static_cast<double>(decay);
}

AdamState::AdamState(const EncoderParams& like)
    : first_moment(like.zeros_like()), second_moment(like.zeros_like()) {
  for (std::size_t b = 0; b < like.blocks().size(); ++b) {
    active_rows.emplace_back(like.vocab_size(), 0);
  }
}

void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state, double lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment) ||
      state.active_rows.size() != params.blocks().size()) {
    throw ShapeError("adam_step: params, gradient and moments differ in shape");
  }
  const std::size_t dim = params.dim();
  auto g_blocks = grads.blocks();

  // Validate the whole gradient before touching any state.
  std::vector<std::vector<char>> newly_active(g_blocks.size());
  for (std::size_t b = 0; b < g_blocks.size(); ++b) {
    auto g = g_blocks[b];
    auto& active = state.active_rows[b];
    auto& fresh = newly_active[b];
    fresh.assign(active.size(), 0);
    std::atomic<bool> finite{true};
    parallel_for(active.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        const double* row = g.data() + r * dim;
        // probe stays 0 unless an entry is inf or nan.
        double probe = 0.0;
        bool nonzero = false;
        for (std::size_t c = 0; c < dim; ++c) {
          probe += row[c] * 0.0;
          nonzero |= row[c] != 0.0;
        }
        if (probe != 0.0 || std::isnan(probe)) finite = false;
        fresh[r] = nonzero && !active[r];
      }
    });
    if (!finite) throw NumericError("non-finite gradient entry");
  }

  const std::uint64_t t = state.step_count + 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t));
  const double eps = state.epsilon;

  auto p_blocks = params.blocks();
  auto m_blocks = state.first_moment.blocks();
  auto v_blocks = state.second_moment.blocks();
  std::atomic<bool> finite{true};
  for (std::size_t b = 0; b < p_blocks.size(); ++b) {
    auto& active = state.active_rows[b];
    for (std::size_t r = 0; r < active.size(); ++r) active[r] = active[r] || newly_active[b][r];
    auto p = p_blocks[b];
    auto g = g_blocks[b];
    auto m = m_blocks[b];
    auto v = v_blocks[b];
    parallel_for(active.size(), [&](std::size_t begin, std::size_t end) {
      bool ok = true;
      for (std::size_t r = begin; r < end; ++r) {
        if (!active[r]) continue;
        for (std::size_t i = r * dim; i < (r + 1) * dim; ++i) {
          m[i] = b1 * m[i] + (1.0 - b1) * g[i];
          v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
          p[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + eps);
          ok = ok && std::isfinite(p[i]);
        }
      }
      if (!ok) finite = false;
    });
  }
  state.step_count = t;
  params.bump_version();
  if (!finite) throw NumericError("Adam update produced a non-finite parameter");
}

double validation_mrr10(const EncoderParams& params, const Corpus& corpus,
                        const Validation& validation, const FeaturizerConfig& featurizer) {
  const DenseIndex index = build_index(params, corpus, featurizer);
  const auto run = search_all(index, params, validation.queries, featurizer, 10);
  return mrr_at_k(run, validation.qrels, 10, validation.rel_threshold).mean;
}

double dataset_loss(const EncoderParams& params, const TrainingDataset& dataset,
                    const QuerySet& queries, const Corpus& corpus,
                    const FeaturizerConfig& featurizer) {
  if (dataset.examples.empty()) return 0.0;
  const auto doc_tokens = tokenize_corpus(corpus, featurizer);
  const auto prepared = prepare(dataset, queries, corpus, doc_tokens, featurizer);
  double total = 0.0;
  for (const auto& ex : prepared) total += example_loss(params, ex, 0.0, nullptr);
  return total / static_cast<double>(prepared.size());
}

TrainingResult run_curriculum(const CurriculumSchedule& schedule, EncoderParams init,
                              const Teacher& teacher, const QuerySet& queries,
                              const Corpus& corpus, const TrainerOptions& options,
                              const std::optional<Validation>& validation,
                              const IterationHook& on_iteration) {
  schedule.validate();
  options.featurizer.validate();
  if (options.batch_size == 0) throw ConfigError("batch size must be positive");
  if (init.vocab_size() != options.featurizer.vocab_size) {
    throw ConfigError("encoder vocab size differs from featurizer vocab size");
  }

  TrainingResult result;
  result.params = std::move(init);
  EncoderParams& params = result.params;
  AdamState adam(params);
  EncoderParams grad = params.zeros_like();
  const auto doc_tokens = tokenize_corpus(corpus, options.featurizer);

  if (validation) {
    result.initial_val_mrr10 = validation_mrr10(params, corpus, *validation, options.featurizer);
  }

  const auto order = schedule.execution_order();
  for (std::size_t level = 0; level < order.size(); ++level) {
    const IterationConfig& config = order[level];
    const int delta = static_cast<int>(level) + 1;

    const DenseIndex index = build_index(params, corpus, options.featurizer);
    const GenerationInputs inputs{params, index, options.featurizer, teacher, queries, corpus};
    const TrainingDataset dataset = generate_iteration_data(
        config, schedule.depth, inputs, derive_seed(options.seed, static_cast<std::uint64_t>(delta)),
        delta);
    const auto prepared = prepare(dataset, queries, corpus, doc_tokens, options.featurizer);

    const std::size_t batches = (prepared.size() + options.batch_size - 1) / options.batch_size;
    LrSchedule lr;
    lr.total_steps = std::max<std::size_t>(1, config.epochs * batches);
    lr.warmup_steps = std::min(lr.total_steps, options.warmup_steps.value_or(default_warmup(lr.total_steps)));
    lr.peak_lr = config.peak_lr;

    IterationMetrics metrics;
    metrics.delta = delta;
    metrics.group1_size = config.group1_size;
    metrics.examples = prepared.size();
    metrics.dropped_queries = dataset.dropped_queries;

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t step = 0;
    std::vector<std::size_t> perm(prepared.size());
    for (std::size_t epoch = 0; epoch < config.epochs && !prepared.empty(); ++epoch) {
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(derive_seed(options.seed, static_cast<std::uint64_t>(delta)),
                          static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

      for (std::size_t start = 0; start < perm.size(); start += options.batch_size) {
        const std::size_t stop = std::min(perm.size(), start + options.batch_size);
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (std::size_t b = start; b < stop; ++b) {
          loss_sum += example_loss(params, prepared[perm[b]], scale, &grad);
          ++loss_count;
        }
        try {
          adam_step(params, grad, adam, lr_at(step, lr));
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " (difficulty " + std::to_string(delta) +
                             ", epoch " + std::to_string(epoch + 1) + ", batch starting at " +
                             std::to_string(start) + ")");
        }
        for (std::size_t b = start; b < stop; ++b) clear_rows(grad, prepared[perm[b]]);
        ++step;
      }
    }
    metrics.steps = step;
    metrics.train_loss_mean = loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count);
    result.total_steps += step;
    if (validation) {
      metrics.val_mrr10 = validation_mrr10(params, corpus, *validation, options.featurizer);
    }
    spdlog::info("difficulty {} (group 1 = {}): {} examples, {} steps, mean loss {:.6f}{}", delta,
                 config.group1_size, metrics.examples, metrics.steps, metrics.train_loss_mean,
                 metrics.val_mrr10 ? fmt::format(", val MRR@10 {:.4f}", *metrics.val_mrr10) : "");
    result.log.push_back(metrics);
    if (on_iteration) on_iteration(metrics, params, dataset);
  }
  return result;
}

}  // namespace cldrd
