#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "cldrd/curriculum.hpp"
#include "cldrd/errors.hpp"
#include "cldrd/synth.hpp"

using namespace cldrd;

namespace {

RankedList ranked(std::size_t n) {
  std::vector<std::pair<std::string, double>> ordered;
  for (std::size_t i = 0; i < n; ++i) {
    ordered.emplace_back("d" + std::to_string(i + 1), static_cast<double>(n - i));
  }
  return make_ranked_list("q", ordered);
}

IterationConfig small_config(std::size_t k, std::size_t k2, std::size_t k3, std::size_t nh,
                             std::size_t ns) {
  IterationConfig c;
  c.group1_size = k;
  c.group2_size = k2;
  c.group3_size = k3;
  c.group2_samples = nh;
  c.group3_samples = ns;
  c.peak_lr = 1e-3;
  return c;
}

SynthConfig tiny_world_config() {
  SynthConfig c;
  c.num_topics = 6;
  c.docs_per_topic = 40;
  c.vocab_per_topic = 20;
  c.shared_vocab = 100;
  c.num_train_queries = 12;
  c.num_eval_queries = 4;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("standard schedule matches the three difficulty levels") {
  const CurriculumSchedule s = CurriculumSchedule::standard();
  CHECK_NOTHROW(s.validate());
  REQUIRE(s.iterations.size() == 3);
  CHECK(s.depth == 200);
  const std::size_t k[] = {5, 10, 30};
  const std::size_t k2[] = {45, 40, 20};
  const std::size_t nh[] = {12, 10, 0};
  const std::size_t ns[] = {13, 10, 0};
  const double lr[] = {7e-6, 3e-6, 3e-6};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& it = s.iterations[i];
    CHECK(it.group1_size == k[i]);
    CHECK(it.group2_size == k2[i]);
    CHECK(it.group3_size == 150);
    CHECK(it.group2_samples == nh[i]);
    CHECK(it.group3_samples == ns[i]);
    CHECK(it.list_size() == 30);
    CHECK(it.pool_size() == 200);
    CHECK(it.peak_lr == lr[i]);
  }
}

TEST_CASE("difficulty grows: head pair count K(K-1)/2 is 10, 45, 435") {
  const CurriculumSchedule s = CurriculumSchedule::standard();
  std::vector<std::size_t> counts;
  for (const auto& it : s.iterations) counts.push_back(it.group1_size * (it.group1_size - 1) / 2);
  CHECK(counts == std::vector<std::size_t>{10, 45, 435});
}

TEST_CASE("reverse schedule runs the hardest data first, keeping per-position lr") {
  CurriculumSchedule s = CurriculumSchedule::standard(1.0, 2);
  s.reverse = true;
  const auto order = s.execution_order();
  CHECK(order[0].group1_size == 30);
  CHECK(order[1].group1_size == 10);
  CHECK(order[2].group1_size == 5);
  CHECK(order[2].group2_samples == 12);
  CHECK(order[0].peak_lr == 7e-6);
  CHECK(order[2].peak_lr == 3e-6);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(small_config(5, 45, 150, 46, 0).validate(200), ConfigError);
  CHECK_THROWS_AS(small_config(5, 45, 150, 0, 151).validate(200), ConfigError);
  CHECK_THROWS_AS(small_config(5, 45, 149, 0, 0).validate(200), ConfigError);
  CHECK_THROWS_AS(small_config(0, 50, 150, 0, 0).validate(200), ConfigError);
  CHECK_NOTHROW(small_config(5, 45, 150, 12, 13).validate(200));
  CurriculumSchedule empty;
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("assign_pseudo_labels follows the group boundaries") {
  const auto config = small_config(5, 45, 150, 12, 13);
  const RankedList list = ranked(200);
  const auto labels = assign_pseudo_labels(list, config);
  CHECK(labels.size() == 200);
  CHECK(labels.at("d1") == 1.0);
  CHECK(labels.at("d2") == 0.5);
  CHECK(labels.at("d3") == 1.0 / 3.0);
  CHECK(labels.at("d4") == 0.25);
  CHECK(labels.at("d5") == 0.2);
  CHECK(labels.at("d6") == 0.0);
  CHECK(labels.at("d50") == 0.0);
  CHECK(labels.at("d51") == -1.0);
  CHECK(labels.at("d200") == -1.0);
  CHECK_THROWS_AS(assign_pseudo_labels(ranked(199), config), DomainError);
}

TEST_CASE("sample_groups edge cases") {
  const RankedList list = ranked(10);
  Rng rng(1);
  SUBCASE("exhaustive group 2 sample") {
    const auto s = sample_groups(list, small_config(2, 4, 4, 4, 1), rng);
    CHECK(s.group1 == std::vector<std::string>{"d1", "d2"});
    auto g2 = s.group2;
    std::sort(g2.begin(), g2.end());
    CHECK(g2 == std::vector<std::string>{"d3", "d4", "d5", "d6"});
    REQUIRE(s.group3.size() == 1);
  }
  SUBCASE("empty samples") {
    const auto s = sample_groups(list, small_config(2, 4, 4, 0, 0), rng);
    CHECK(s.group2.empty());
    CHECK(s.group3.empty());
  }
  SUBCASE("oversized sample") {
    CHECK_THROWS_AS(sample_groups(list, small_config(2, 4, 4, 5, 0), rng), ConfigError);
  }
  SUBCASE("deterministic given the seed") {
    Rng a(99);
    Rng b(99);
    const auto config = small_config(2, 4, 4, 2, 2);
    const auto sa = sample_groups(list, config, a);
    const auto sb = sample_groups(list, config, b);
    CHECK(sa.group2 == sb.group2);
    CHECK(sa.group3 == sb.group3);
  }
}

TEST_CASE("sample_groups draws uniformly (Monte Carlo, 10000 seeded draws)") {
  const RankedList list = ranked(7);
  const auto config = small_config(1, 4, 2, 2, 1);
  std::map<std::string, int> hits;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    Rng rng(derive_seed(12345, static_cast<std::uint64_t>(i)));
    const auto s = sample_groups(list, config, rng);
    REQUIRE(s.group2.size() == 2);
    CHECK(s.group2[0] != s.group2[1]);
    for (const auto& id : s.group2) ++hits[id];
  }
  REQUIRE(hits.size() == 4);
  for (const auto& [id, count] : hits) {
    const double freq = static_cast<double>(count) / draws;
    CHECK(freq == doctest::Approx(0.5).epsilon(0.04));
  }
}

TEST_CASE("generate_iteration_data shapes and determinism") {
  const SynthWorld world = generate_world(tiny_world_config());
  const FeaturizerConfig featurizer;
  const EncoderParams params = EncoderParams::random(featurizer.vocab_size, 8, false, 1);
  const DenseIndex index = build_index(params, world.corpus, featurizer);
  const OracleTeacher teacher(world.oracle_grades, 0.0, 0);
  const GenerationInputs inputs{params, index, featurizer, teacher, world.train_queries,
                                world.corpus};
  // 240 docs: groups of 4 / 16 / 180 over a pool of 200.
  const auto config = small_config(4, 16, 180, 5, 6);
  const TrainingDataset data = generate_iteration_data(config, 200, inputs, 7, 1);
  CHECK(data.dropped_queries == 0);
  REQUIRE(data.examples.size() == world.train_queries.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& ex = data.examples[i];
    CHECK(ex.query_id == world.train_queries[i].id);
    REQUIRE(ex.docs.size() == 15);
    std::set<std::string> ids;
    int positive = 0, zero = 0, negative = 0;
    for (std::size_t j = 0; j < ex.docs.size(); ++j) {
      const auto& d = ex.docs[j];
      ids.insert(d.doc_id);
      CHECK(d.retrieval_rank >= 1);
      CHECK(d.retrieval_rank <= 200);
      if (d.label > 0) {
        ++positive;
        CHECK(d.label == 1.0 / static_cast<double>(d.teacher_rank));
        CHECK(d.teacher_rank == j + 1);
      } else if (d.label == 0.0) {
        ++zero;
        CHECK(d.teacher_rank > 4);
        CHECK(d.teacher_rank <= 20);
      } else {
        ++negative;
        CHECK(d.label == -1.0);
        CHECK(d.teacher_rank > 20);
      }
    }
    CHECK(ids.size() == 15);
    CHECK(positive == 4);
    CHECK(zero == 5);
    CHECK(negative == 6);
  }

  const TrainingDataset again = generate_iteration_data(config, 200, inputs, 7, 1);
  std::ostringstream a, b;
  write_dataset(data, a);
  write_dataset(again, b);
  CHECK(a.str() == b.str());
  const std::string first_line = a.str().substr(0, a.str().find('\n'));
  CHECK(std::count(first_line.begin(), first_line.end(), '\t') == 5);
  CHECK(first_line.rfind("1\t", 0) == 0);
}

TEST_CASE("sampling is stable under query reordering") {
  const SynthWorld world = generate_world(tiny_world_config());
  const FeaturizerConfig featurizer;
  const EncoderParams params = EncoderParams::random(featurizer.vocab_size, 8, false, 1);
  const DenseIndex index = build_index(params, world.corpus, featurizer);
  const OracleTeacher teacher(world.oracle_grades, 0.0, 0);
  QuerySet reversed;
  for (auto it = world.train_queries.items().rbegin(); it != world.train_queries.items().rend(); ++it) {
    reversed.add(*it);
  }
  const auto config = small_config(4, 16, 180, 5, 6);
  const auto forward = generate_iteration_data(
      config, 200, {params, index, featurizer, teacher, world.train_queries, world.corpus}, 7, 1);
  const auto backward = generate_iteration_data(
      config, 200, {params, index, featurizer, teacher, reversed, world.corpus}, 7, 1);
  REQUIRE(forward.examples.size() == backward.examples.size());
  const std::size_t n = forward.examples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = forward.examples[i];
    const auto& b = backward.examples[n - 1 - i];
    CHECK(a.query_id == b.query_id);
    for (std::size_t j = 0; j < a.docs.size(); ++j) CHECK(a.docs[j].doc_id == b.docs[j].doc_id);
  }
}

TEST_CASE("queries with a candidate pool shorter than the depth are dropped") {
  SynthConfig sc = tiny_world_config();
  sc.num_topics = 3;
  sc.docs_per_topic = 50;  // 150 documents
  const SynthWorld world = generate_world(sc);
  REQUIRE(world.corpus.size() == 150);
  const FeaturizerConfig featurizer;
  const EncoderParams params = EncoderParams::random(featurizer.vocab_size, 8, false, 1);
  const DenseIndex index = build_index(params, world.corpus, featurizer);
  const OracleTeacher teacher(world.oracle_grades, 0.0, 0);
  const auto data = generate_iteration_data(
      CurriculumSchedule::standard().iterations[0], 200,
      {params, index, featurizer, teacher, world.train_queries, world.corpus}, 1, 1);
  CHECK(data.examples.empty());
  CHECK(data.dropped_queries == world.train_queries.size());
}

TEST_CASE("a stale index is rejected") {
  const SynthWorld world = generate_world(tiny_world_config());
  const FeaturizerConfig featurizer;
  EncoderParams params = EncoderParams::random(featurizer.vocab_size, 8, false, 1);
  const DenseIndex index = build_index(params, world.corpus, featurizer);
  params.bump_version();
  const OracleTeacher teacher(world.oracle_grades, 0.0, 0);
  CHECK_THROWS_AS(generate_iteration_data(
                      small_config(4, 16, 180, 5, 6), 200,
                      {params, index, featurizer, teacher, world.train_queries, world.corpus}, 1, 1),
                  ConfigError);
}
