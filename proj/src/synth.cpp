#include "cldrd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cldrd/errors.hpp"
#include "cldrd/rng.hpp"

namespace cldrd {

namespace {

/// Inverse-CDF sampler over ranks 0..n-1 with p(r) proportional to (r+1)^-s.
class Zipf {
 public:
  Zipf(std::size_t n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += std::pow(static_cast<double>(r + 1), -exponent);
      cdf_[r] = total;
    }
    for (auto& c : cdf_) c /= total;
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::string padded(std::string_view prefix, std::size_t value, std::size_t count) {
  const std::size_t width = std::to_string(std::max<std::size_t>(count, 1) - 1).size();
  std::string digits = std::to_string(value);
  return std::string(prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

struct WordSampler {
  const SynthConfig& config;
  Zipf topical;
  Zipf background;

  std::string topic_word(std::size_t topic, Rng& rng) const {
    return "t" + std::to_string(topic) + "w" + std::to_string(topical.draw(rng));
  }
  std::string background_word(Rng& rng) const { return "bg" + std::to_string(background.draw(rng)); }
};

std::size_t neighbor(std::size_t topic, bool up, std::size_t num_topics) {
  return up ? (topic + 1) % num_topics : (topic + num_topics - 1) % num_topics;
}

std::string make_doc(const WordSampler& words, std::size_t topic, Rng& rng) {
  const auto& c = words.config;
  std::string text;
  for (std::size_t i = 0; i < c.doc_length; ++i) {
    const double u = rng.uniform();
    std::string word;
    if (u < c.doc_topic_weight) {
      word = words.topic_word(topic, rng);
    } else if (u < c.doc_topic_weight + c.doc_neighbor_weight) {
      word = words.topic_word(neighbor(topic, rng.below(2) == 1, c.num_topics), rng);
    } else {
      word = words.background_word(rng);
    }
    if (!text.empty()) text.push_back(' ');
    text += word;
  }
  return text;
}

std::string make_query(const WordSampler& words, std::size_t topic, Rng& rng) {
  const auto& c = words.config;
  std::string text;
  for (std::size_t i = 0; i < c.query_length; ++i) {
    const std::string word = rng.uniform() < c.query_topic_weight ? words.topic_word(topic, rng)
                                                                   : words.background_word(rng);
    if (!text.empty()) text.push_back(' ');
    text += word;
  }
  return text;
}

int grade(const SynthConfig& c, std::size_t query_topic, std::size_t doc_topic) {
  const auto distance = static_cast<int>(ring_distance(query_topic, doc_topic, c.num_topics));
  return std::max(0, c.grade_levels - 1 - distance);
}

}  // namespace

void SynthConfig::validate() const {
  if (num_topics == 0 || docs_per_topic == 0 || vocab_per_topic == 0 || shared_vocab == 0 ||
      num_train_queries == 0 || num_eval_queries == 0 || doc_length == 0 || query_length == 0) {
    throw ConfigError("synthetic world counts must be >= 1");
  }
  if (grade_levels < 2) throw ConfigError("grade_levels must be >= 2");
  auto unit = [](double w) { return w >= 0.0 && w <= 1.0; };
  if (!unit(doc_topic_weight) || !unit(doc_neighbor_weight) || !unit(query_topic_weight) ||
      doc_topic_weight + doc_neighbor_weight > 1.0) {
    throw ConfigError("mixture weights must lie in [0, 1] and sum to at most 1");
  }
  if (!(zipf_exponent >= 0.0)) throw ConfigError("zipf exponent must be >= 0");
}

std::size_t ring_distance(std::size_t a, std::size_t b, std::size_t num_topics) {
  const std::size_t d = a > b ? a - b : b - a;
  return std::min(d, num_topics - d);
}

SynthWorld generate_world(const SynthConfig& config) {
  config.validate();
  SynthWorld world;
  const WordSampler words{config, Zipf(config.vocab_per_topic, config.zipf_exponent),
                          Zipf(config.shared_vocab, config.zipf_exponent)};

  const std::size_t num_docs = config.num_topics * config.docs_per_topic;
  world.doc_topics.resize(num_docs);
  for (std::size_t i = 0; i < num_docs; ++i) world.doc_topics[i] = i / config.docs_per_topic;
  Rng layout(derive_seed(config.seed, "layout"));
  for (std::size_t i = num_docs; i > 1; --i) {
    std::swap(world.doc_topics[i - 1], world.doc_topics[layout.below(i)]);
  }

  Rng doc_rng(derive_seed(config.seed, "documents"));
  for (std::size_t i = 0; i < num_docs; ++i) {
    world.corpus.add({padded("", i, num_docs), make_doc(words, world.doc_topics[i], doc_rng)});
  }

  Rng query_rng(derive_seed(config.seed, "queries"));
  auto make_queries = [&](std::size_t count, std::string_view prefix, QuerySet& out,
                          std::vector<std::size_t>& topics) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t topic = query_rng.below(config.num_topics);
      topics.push_back(topic);
      out.add({padded(prefix, i, count), make_query(words, topic, query_rng)});
    }
  };
  make_queries(config.num_train_queries, "train", world.train_queries, world.train_topics);
  make_queries(config.num_eval_queries, "eval", world.eval_queries, world.eval_topics);

  auto add_oracle = [&](const QuerySet& queries, const std::vector<std::size_t>& topics) {
    for (std::size_t q = 0; q < queries.size(); ++q) {
      for (std::size_t d = 0; d < num_docs; ++d) {
        const int g = grade(config, topics[q], world.doc_topics[d]);
        if (g > 0) world.oracle_grades.add(queries[q].id, world.corpus[d].id, g);
      }
    }
  };
  add_oracle(world.train_queries, world.train_topics);
  add_oracle(world.eval_queries, world.eval_topics);

  Rng judge_rng(derive_seed(config.seed, "judgments"));
  for (std::size_t q = 0; q < world.eval_queries.size(); ++q) {
    const std::size_t topic = world.eval_topics[q];
    std::vector<std::size_t> others;
    for (std::size_t d = 0; d < num_docs; ++d) {
      if (world.doc_topics[d] == topic) {
        world.eval_qrels.add(world.eval_queries[q].id, world.corpus[d].id,
                             grade(config, topic, topic));
      } else {
        others.push_back(d);
      }
    }
    const std::size_t take = std::min(config.judged_others, others.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(others[i], others[i + judge_rng.below(others.size() - i)]);
    }
    std::sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(take));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t d = others[i];
      world.eval_qrels.add(world.eval_queries[q].id, world.corpus[d].id,
                           grade(config, topic, world.doc_topics[d]));
    }
  }
  return world;
}

void write_world(const SynthWorld& world, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_collection(world.corpus, dir / "collection.tsv");
  write_queries(world.train_queries, dir / "queries.train.tsv");
  write_queries(world.eval_queries, dir / "queries.eval.tsv");
  write_qrels(world.eval_qrels, dir / "qrels.eval.txt");
  write_qrels(world.oracle_grades, dir / "oracle.grades.txt");
}

}  // namespace cldrd
