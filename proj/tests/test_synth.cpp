#include <doctest.h>

#include <algorithm>
#include <set>

#include "cldrd/errors.hpp"
#include "cldrd/eval.hpp"
#include "cldrd/synth.hpp"
#include "cldrd/teacher.hpp"
#include "test_util.hpp"

using namespace cldrd;

namespace {

SynthConfig small() {
  SynthConfig c;
  c.num_topics = 8;
  c.docs_per_topic = 25;
  c.vocab_per_topic = 15;
  c.shared_vocab = 80;
  c.num_train_queries = 20;
  c.num_eval_queries = 10;
  c.judged_others = 10;
  c.seed = 42;
  return c;
}

/// Expected reciprocal rank within the top k when `relevant` of `total`
/// documents are relevant and the ranking is a uniform permutation.
double random_expected_rr(std::size_t relevant, std::size_t total, std::size_t k) {
  double expected = 0.0;
  double none_before = 1.0;
  for (std::size_t r = 1; r <= k && r <= total; ++r) {
    const double here = static_cast<double>(relevant) / static_cast<double>(total - r + 1);
    expected += none_before * here / static_cast<double>(r);
    none_before *= 1.0 - here;
  }
  return expected;
}

}  // namespace

TEST_CASE("ring distance") {
  CHECK(ring_distance(0, 0, 10) == 0);
  CHECK(ring_distance(0, 9, 10) == 1);
  CHECK(ring_distance(2, 7, 10) == 5);
  CHECK(ring_distance(7, 2, 10) == 5);
  CHECK(ring_distance(1, 8, 10) == 3);
}

TEST_CASE("config validation") {
  SynthConfig c = small();
  c.num_topics = 0;
  CHECK_THROWS_AS(generate_world(c), ConfigError);
  c = small();
  c.grade_levels = 1;
  CHECK_THROWS_AS(generate_world(c), ConfigError);
  c = small();
  c.doc_topic_weight = 0.9;
  c.doc_neighbor_weight = 0.5;
  CHECK_THROWS_AS(generate_world(c), ConfigError);
}

TEST_CASE("world shape and grades") {
  const SynthConfig config = small();
  const SynthWorld w = generate_world(config);
  CHECK(w.corpus.size() == 200);
  CHECK(w.train_queries.size() == 20);
  CHECK(w.eval_queries.size() == 10);
  REQUIRE(w.doc_topics.size() == 200);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < w.corpus.size(); ++i) ids.insert(w.corpus[i].id);
  CHECK(ids.size() == 200);

  auto check_grades = [&](const QuerySet& qs, const std::vector<std::size_t>& topics) {
    for (std::size_t q = 0; q < qs.size(); ++q) {
      for (std::size_t d = 0; d < w.corpus.size(); ++d) {
        const int dist = static_cast<int>(ring_distance(topics[q], w.doc_topics[d], 8));
        const int expected = std::max(0, config.grade_levels - 1 - dist);
        CHECK(w.oracle_grades.grade(qs[q].id, w.corpus[d].id).value_or(0) == expected);
      }
    }
  };
  check_grades(w.train_queries, w.train_topics);
  check_grades(w.eval_queries, w.eval_topics);

  for (std::size_t q = 0; q < w.eval_queries.size(); ++q) {
    const auto* judged = w.eval_qrels.for_query(w.eval_queries[q].id);
    REQUIRE(judged != nullptr);
    std::size_t same_topic = 0;
    bool any_positive = false;
    for (const auto& [doc, g] : *judged) {
      const auto pos = w.corpus.position(doc);
      REQUIRE(pos.has_value());
      same_topic += w.doc_topics[*pos] == w.eval_topics[q] ? 1 : 0;
      any_positive = any_positive || g > 0;
      CHECK(g == w.oracle_grades.grade(w.eval_queries[q].id, doc).value_or(0));
    }
    CHECK(same_topic == 25);
    CHECK(judged->size() == 35);
    CHECK(any_positive);
  }
}

TEST_CASE("a single topic gives every pair the top grade") {
  SynthConfig c = small();
  c.num_topics = 1;
  c.judged_others = 0;
  const SynthWorld w = generate_world(c);
  for (std::size_t q = 0; q < w.eval_queries.size(); ++q) {
    for (std::size_t d = 0; d < w.corpus.size(); ++d) {
      CHECK(w.eval_qrels.grade(w.eval_queries[q].id, w.corpus[d].id) == 3);
    }
  }
}

TEST_CASE("two topics with two grade levels are disjoint") {
  SynthConfig c = small();
  c.num_topics = 2;
  c.grade_levels = 2;
  const SynthWorld w = generate_world(c);
  for (std::size_t q = 0; q < w.train_queries.size(); ++q) {
    for (std::size_t d = 0; d < w.corpus.size(); ++d) {
      const int g = w.oracle_grades.grade(w.train_queries[q].id, w.corpus[d].id).value_or(0);
      CHECK(g == (w.doc_topics[d] == w.train_topics[q] ? 1 : 0));
    }
  }
}

TEST_CASE("generation is deterministic per seed, down to the bytes") {
  cldrd::testing::TempDir a("synth_a"), b("synth_b"), c("synth_c");
  write_world(generate_world(small()), a.path());
  write_world(generate_world(small()), b.path());
  SynthConfig other = small();
  other.seed = 43;
  write_world(generate_world(other), c.path());
  for (const char* f : {"collection.tsv", "queries.train.tsv", "queries.eval.tsv",
                        "qrels.eval.txt", "oracle.grades.txt"}) {
    const std::string first = cldrd::testing::read_file(a / f);
    CHECK(!first.empty());
    CHECK(first == cldrd::testing::read_file(b / f));
  }
  CHECK(cldrd::testing::read_file(a / "collection.tsv") !=
        cldrd::testing::read_file(c / "collection.tsv"));

  // Files parse back into the same world.
  const Corpus corpus = load_collection(a / "collection.tsv");
  const SynthWorld w = generate_world(small());
  REQUIRE(corpus.size() == w.corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(corpus[i].id == w.corpus[i].id);
    CHECK(corpus[i].text == w.corpus[i].text);
  }
  CHECK(load_qrels(a / "qrels.eval.txt").size() == w.eval_qrels.size());
  CHECK(load_qrels(a / "oracle.grades.txt").size() == w.oracle_grades.size());
}

TEST_CASE("the zero-noise oracle ranks higher grades first") {
  const SynthWorld w = generate_world(small());
  const OracleTeacher teacher(w.oracle_grades, 0.0, 0);
  std::vector<std::pair<std::string, double>> all;
  for (const auto& d : w.corpus) all.emplace_back(d.id, 0.0);
  const RankedList everything = make_ranked_list("", all);
  for (const auto& q : w.train_queries) {
    RankedList candidates = everything;
    candidates.query_id = q.id;
    const RankedList ranked = rerank(teacher, q, candidates, w.corpus);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
      CHECK(w.oracle_grades.grade(q.id, ranked.entries[i - 1].doc_id).value_or(0) >=
            w.oracle_grades.grade(q.id, ranked.entries[i].doc_id).value_or(0));
    }
  }
}

TEST_CASE("BM25 beats a random ranking on the default world") {
  const SynthWorld w = generate_world(SynthConfig{});
  REQUIRE(w.corpus.size() == 10000);
  REQUIRE(w.train_queries.size() == 500);
  REQUIRE(w.eval_queries.size() == 100);
  const LexicalTeacher bm25(w.corpus);
  std::vector<RankedList> run;
  double random_mrr = 0.0;
  for (const auto& q : w.eval_queries) {
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& d : w.corpus) scored.emplace_back(d.id, bm25.score(q, d));
    RankedList list = sort_into_ranked_list(q.id, scored);
    list.entries.resize(10);
    run.push_back(std::move(list));
    std::size_t relevant = 0;
    for (const auto& [doc, g] : *w.eval_qrels.for_query(q.id)) relevant += g >= 1 ? 1 : 0;
    random_mrr += random_expected_rr(relevant, w.corpus.size(), 10);
  }
  random_mrr /= static_cast<double>(w.eval_queries.size());
  const double bm25_mrr = mrr_at_k(run, w.eval_qrels).mean;
  MESSAGE("BM25 MRR@10 " << bm25_mrr << " vs random " << random_mrr);
  CHECK(bm25_mrr > random_mrr);
}
