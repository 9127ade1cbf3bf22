// Command-line front end: synthetic worlds, curriculum training, indexing,
// retrieval, teacher re-ranking and evaluation.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cldrd/curriculum.hpp"
#include "cldrd/data_model.hpp"
#include "cldrd/dense_index.hpp"
#include "cldrd/errors.hpp"
#include "cldrd/eval.hpp"
#include "cldrd/featurizer.hpp"
#include "cldrd/rng.hpp"
#include "cldrd/synth.hpp"
#include "cldrd/teacher.hpp"
#include "cldrd/trainer.hpp"

namespace fs = std::filesystem;
using namespace cldrd;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// --- flat `key = value` config files -------------------------------------

/// Fills options the command line left unset from a flat config file. Runs
/// as the --config callback, before CLI11 converts values and checks required
/// options. Keys are long option names; underscores count as dashes. Keys
/// that belong to another subcommand are skipped.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (!item.parents.empty()) {
      throw ConfigError(path + ": sections are not supported (" + item.fullname() + ")");
    }
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") throw ConfigError(path + ": config files cannot nest");
    CLI::Option* opt = cmd.get_option_no_throw("--" + name);
    if (opt == nullptr) {
      // One file may serve several commands; only keys no command knows are errors.
      bool known = false;
      for (const CLI::App* other : cmd.get_parent()->get_subcommands({})) {
        known = known || other->get_option_no_throw("--" + name) != nullptr;
      }
      if (!known) throw ConfigError(path + ": unknown key '" + item.name + "'");
      continue;
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
  }
}

// --- shared option groups ---------------------------------------------------

struct TeacherOptions {
  std::string kind = "oracle";
  std::string grades;
  std::string scores;
  double noise = 0.0;
  std::uint64_t seed = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--teacher", kind, "oracle, file or lexical")
        ->check(CLI::IsMember({"oracle", "file", "lexical"}))
        ->capture_default_str();
    cmd.add_option("--teacher-grades", grades, "grade table for the oracle teacher");
    cmd.add_option("--teacher-scores", scores, "qid<TAB>docid<TAB>score file");
    cmd.add_option("--teacher-noise", noise, "oracle noise scale")->capture_default_str();
    cmd.add_option("--teacher-seed", seed, "oracle noise seed")->capture_default_str();
  }

  std::unique_ptr<Teacher> build(const Corpus& corpus) const {
    if (kind == "oracle") {
      if (grades.empty()) throw ConfigError("--teacher oracle needs --teacher-grades");
      return std::make_unique<OracleTeacher>(load_qrels(grades), noise, seed);
    }
    if (kind == "file") {
      if (scores.empty()) throw ConfigError("--teacher file needs --teacher-scores");
      return std::make_unique<FileTeacher>(FileTeacher::load(scores));
    }
    return std::make_unique<LexicalTeacher>(corpus);
  }
};

struct FeaturizerOptions {
  FeaturizerConfig config;

  void add_to(CLI::App& cmd, bool with_vocab) {
    if (with_vocab) {
      cmd.add_option("--vocab-size", config.vocab_size, "hash buckets")->capture_default_str();
    }
    cmd.add_option("--max-query-tokens", config.max_query_tokens)->capture_default_str();
    cmd.add_option("--max-doc-tokens", config.max_doc_tokens)->capture_default_str();
  }

  /// The checkpoint decides the vocabulary size.
  FeaturizerConfig for_params(const EncoderParams& params) const {
    FeaturizerConfig c = config;
    c.vocab_size = params.vocab_size();
    c.validate();
    return c;
  }
};

struct ScheduleOptions {
  std::size_t depth = 200;
  std::optional<std::size_t> iterations;
  std::vector<std::size_t> group1{5, 10, 30};
  std::vector<std::size_t> group2{45, 40, 20};
  std::vector<std::size_t> group3{150};
  std::vector<std::size_t> group2_samples{12, 10, 0};
  std::vector<std::size_t> group3_samples{13, 10, 0};
  std::vector<std::size_t> epochs{3};
  std::vector<double> peak_lr{7e-6, 3e-6, 3e-6};
  double lr_scale = 1000.0;
  bool reverse = false;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--depth", depth, "teacher re-ranking depth")->capture_default_str();
    cmd.add_option("--iterations", iterations, "number of curriculum levels (default 3)");
    auto list = [&](const char* name, auto& target, const char* help) {
      cmd.add_option(name, target, help)->delimiter(',')->capture_default_str();
    };
    list("--group1", group1, "head group size per level");
    list("--group2", group2, "hard-negative group size per level");
    list("--group3", group3, "tail group size per level");
    list("--group2-samples", group2_samples, "docs sampled from group 2 per level");
    list("--group3-samples", group3_samples, "docs sampled from group 3 per level");
    list("--epochs", epochs, "epochs per level");
    list("--peak-lr", peak_lr, "peak learning rate per level, before --lr-scale");
    cmd.add_option("--lr-scale", lr_scale, "multiplier on every peak learning rate")
        ->capture_default_str();
    cmd.add_flag("--reverse", reverse, "run the levels hardest first");
  }

  CurriculumSchedule build() const {
    const std::size_t n = iterations.value_or(std::max(
        {group1.size(), group2.size(), group3.size(), group2_samples.size(),
         group3_samples.size(), epochs.size(), peak_lr.size()}));
    if (n == 0) throw ConfigError("--iterations must be positive");
    auto at = [n](const auto& list, const char* name, std::size_t i) {
      if (list.size() != 1 && list.size() < n) {
        throw ConfigError(std::string(name) + " lists " + std::to_string(list.size()) +
                          " values for " + std::to_string(n) + " levels");
      }
      return list.size() == 1 ? list[0] : list[i];
    };
    CurriculumSchedule s;
    s.depth = depth;
    s.reverse = reverse;
    for (std::size_t i = 0; i < n; ++i) {
      IterationConfig c;
      c.group1_size = at(group1, "--group1", i);
      c.group2_size = at(group2, "--group2", i);
      c.group3_size = at(group3, "--group3", i);
      c.group2_samples = at(group2_samples, "--group2-samples", i);
      c.group3_samples = at(group3_samples, "--group3-samples", i);
      c.epochs = at(epochs, "--epochs", i);
      c.peak_lr = at(peak_lr, "--peak-lr", i) * lr_scale;
      s.iterations.push_back(c);
    }
    s.validate();
    return s;
  }
};

struct MetricOptions {
  int rel_threshold = 1;
  std::string gain = "linear";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--rel-threshold", rel_threshold, "minimum grade counted as relevant")
        ->capture_default_str();
    cmd.add_option("--gain", gain, "nDCG gain: linear or exponential")
        ->check(CLI::IsMember({"linear", "exponential"}))
        ->capture_default_str();
  }
};

// --- helpers ---------------------------------------------------------------

std::vector<MetricReport> evaluate_run(const std::vector<RankedList>& run, const Qrels& qrels,
                                       const MetricOptions& m) {
  return {mrr_at_k(run, qrels, 10, m.rel_threshold),
          ndcg_at_k(run, qrels, 10, m.gain == "linear" ? Gain::linear : Gain::exponential),
          map_at_k(run, qrels, 1000, m.rel_threshold)};
}

void report(const std::vector<RankedList>& run, const Qrels& qrels, const MetricOptions& m,
            const std::string& compare_path, const std::string& per_query_path) {
  const auto reports = evaluate_run(run, qrels, m);
  write_report(reports, std::cout);
  if (!per_query_path.empty()) {
    std::ofstream out(per_query_path);
    if (!out) throw IoError("cannot write " + per_query_path);
    write_per_query(reports, out);
  }
  if (compare_path.empty()) return;
  const auto other = evaluate_run(load_run(compare_path), qrels, m);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const TTestResult t = paired_t_test(reports[i].per_query, other[i].per_query);
    std::printf("ttest\t%s\t%zu\tn=%zu\tt=%.6f\tp=%.6f\n", reports[i].metric.c_str(),
                reports[i].cutoff, t.n, t.t, t.p);
  }
}

/// Random student whose values survive a float32 checkpoint round trip, so
/// resuming from init.ckpt reproduces a fresh run exactly.
EncoderParams fresh_student(std::size_t vocab, std::size_t dim, bool shared, std::uint64_t seed) {
  EncoderParams p = EncoderParams::random(vocab, dim, shared, derive_seed(seed, "init"));
  for (auto block : p.blocks()) {
    for (double& x : block) x = static_cast<double>(static_cast<float>(x));
  }
  return p;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// --- commands ----------------------------------------------------------------

struct SynthCommand {
  SynthConfig config;
  std::string out;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--out", out, "output directory")->required();
    cmd.add_option("--seed", config.seed)->capture_default_str();
    cmd.add_option("--topics", config.num_topics)->capture_default_str();
    cmd.add_option("--docs-per-topic", config.docs_per_topic)->capture_default_str();
    cmd.add_option("--vocab-per-topic", config.vocab_per_topic)->capture_default_str();
    cmd.add_option("--shared-vocab", config.shared_vocab)->capture_default_str();
    cmd.add_option("--train-queries", config.num_train_queries)->capture_default_str();
    cmd.add_option("--eval-queries", config.num_eval_queries)->capture_default_str();
    cmd.add_option("--doc-length", config.doc_length)->capture_default_str();
    cmd.add_option("--query-length", config.query_length)->capture_default_str();
    cmd.add_option("--grade-levels", config.grade_levels)->capture_default_str();
    cmd.add_option("--judged-others", config.judged_others)->capture_default_str();
    cmd.add_option("--doc-topic-weight", config.doc_topic_weight)->capture_default_str();
    cmd.add_option("--doc-neighbor-weight", config.doc_neighbor_weight)->capture_default_str();
    cmd.add_option("--query-topic-weight", config.query_topic_weight)->capture_default_str();
    cmd.add_option("--zipf-exponent", config.zipf_exponent)->capture_default_str();
  }

  void run() const {
    const SynthWorld world = generate_world(config);
    write_world(world, out);
    spdlog::info("wrote {} docs, {} train and {} eval queries to {}", world.corpus.size(),
                 world.train_queries.size(), world.eval_queries.size(), out);
  }
};

struct TrainCommand {
  std::string collection;
  std::string queries;
  std::string val_queries;
  std::string val_qrels;
  std::string init;
  std::string out;
  std::size_t dim = 64;
  bool shared = false;
  std::size_t batch_size = 8;
  std::optional<std::size_t> warmup;
  std::uint64_t seed = 0;
  int val_threshold = 1;
  TeacherOptions teacher;
  FeaturizerOptions featurizer;
  ScheduleOptions schedule;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--collection", collection, "docid<TAB>text file")->required();
    cmd.add_option("--queries", queries, "training queries")->required();
    cmd.add_option("--val-queries", val_queries, "validation queries");
    cmd.add_option("--val-qrels", val_qrels, "validation judgments");
    cmd.add_option("--val-rel-threshold", val_threshold)->capture_default_str();
    cmd.add_option("--init", init, "start from this checkpoint instead of a random student");
    cmd.add_option("--out", out, "output directory")->required();
    cmd.add_option("--dim", dim, "embedding width")->capture_default_str();
    cmd.add_flag("--shared", shared, "one embedding table for queries and documents");
    cmd.add_option("--batch-size", batch_size)->capture_default_str();
    cmd.add_option("--warmup", warmup, "warmup steps per level (default min(4000, steps/10))");
    cmd.add_option("--seed", seed)->capture_default_str();
    teacher.add_to(cmd);
    featurizer.add_to(cmd, true);
    schedule.add_to(cmd);
  }

  void run() const {
    const CurriculumSchedule sched = schedule.build();
    if (val_queries.empty() != val_qrels.empty()) {
      throw ConfigError("--val-queries and --val-qrels go together");
    }
    const Corpus corpus = load_collection(collection);
    const QuerySet train_queries = load_queries(queries);
    const auto t = teacher.build(corpus);

    const fs::path dir(out);
    ensure_dir(dir);
    EncoderParams start = init.empty()
                              ? fresh_student(featurizer.config.vocab_size, dim, shared, seed)
                              : load_checkpoint(init);
    save_checkpoint(start, dir / "init.ckpt");

    TrainerOptions options;
    options.featurizer = featurizer.for_params(start);
    options.batch_size = batch_size;
    options.seed = seed;
    options.warmup_steps = warmup;

    std::optional<QuerySet> vq;
    std::optional<Qrels> vr;
    std::optional<Validation> validation;
    if (!val_queries.empty()) {
      vq = load_queries(val_queries);
      vr = load_qrels(val_qrels);
      validation.emplace(Validation{*vq, *vr, val_threshold});
    }

    std::ofstream log(dir / "metrics.jsonl", std::ios::binary);
    if (!log) throw IoError("cannot write " + (dir / "metrics.jsonl").string());
    auto on_iteration = [&](const IterationMetrics& m, const EncoderParams& params,
                            const TrainingDataset& data) {
      const std::string tag = "iter" + std::to_string(m.delta);
      save_checkpoint(params, dir / (tag + ".ckpt"));
      write_dataset(data, dir / ("data." + tag + ".tsv"));
      nlohmann::ordered_json rec;
      rec["delta"] = m.delta;
      rec["group1_size"] = m.group1_size;
      rec["examples"] = m.examples;
      rec["dropped_queries"] = m.dropped_queries;
      rec["epoch_steps"] = m.steps;
      rec["train_loss_mean"] = m.train_loss_mean;
      if (m.val_mrr10) rec["val_mrr10"] = *m.val_mrr10;
      log << rec.dump() << '\n';
      log.flush();
    };
    const TrainingResult result =
        run_curriculum(sched, std::move(start), *t, train_queries, corpus, options, validation,
                       on_iteration);
    if (result.initial_val_mrr10) {
      spdlog::info("validation MRR@10 {:.4f} -> {:.4f}", *result.initial_val_mrr10,
                   *result.log.back().val_mrr10);
    }
  }
};

struct GenerateDataCommand {
  std::string collection;
  std::string queries;
  std::string checkpoint;
  std::string out;
  int difficulty = 1;
  std::uint64_t seed = 0;
  TeacherOptions teacher;
  FeaturizerOptions featurizer;
  ScheduleOptions schedule;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--collection", collection)->required();
    cmd.add_option("--queries", queries)->required();
    cmd.add_option("--checkpoint", checkpoint, "student that retrieves the candidates")
        ->required();
    cmd.add_option("--difficulty", difficulty, "1-based level in execution order")
        ->capture_default_str();
    cmd.add_option("--out", out, "dataset TSV")->required();
    cmd.add_option("--seed", seed, "same seed as the training run to reproduce its data")
        ->capture_default_str();
    teacher.add_to(cmd);
    featurizer.add_to(cmd, false);
    schedule.add_to(cmd);
  }

  void run() const {
    const CurriculumSchedule sched = schedule.build();
    const auto order = sched.execution_order();
    if (difficulty < 1 || static_cast<std::size_t>(difficulty) > order.size()) {
      throw ConfigError("--difficulty must lie in 1.." + std::to_string(order.size()));
    }
    const Corpus corpus = load_collection(collection);
    const QuerySet qs = load_queries(queries);
    const auto t = teacher.build(corpus);
    const EncoderParams params = load_checkpoint(checkpoint);
    const FeaturizerConfig fc = featurizer.for_params(params);
    const DenseIndex index = build_index(params, corpus, fc);
    const TrainingDataset data = generate_iteration_data(
        order[static_cast<std::size_t>(difficulty) - 1], sched.depth,
        {params, index, fc, *t, qs, corpus},
        derive_seed(seed, static_cast<std::uint64_t>(difficulty)), difficulty);
    write_dataset(data, out);
    spdlog::info("{} examples, {} queries dropped", data.examples.size(), data.dropped_queries);
  }
};

struct IndexCommand {
  std::string checkpoint;
  std::string collection;
  std::string out;
  FeaturizerOptions featurizer;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--checkpoint", checkpoint)->required();
    cmd.add_option("--collection", collection)->required();
    cmd.add_option("--out", out, "index dump")->required();
    featurizer.add_to(cmd, false);
  }

  void run() const {
    const EncoderParams params = load_checkpoint(checkpoint);
    const Corpus corpus = load_collection(collection);
    save_index(build_index(params, corpus, featurizer.for_params(params)), out);
  }
};

struct RetrieveCommand {
  std::string checkpoint;
  std::string collection;
  std::string index;
  std::string queries;
  std::string out;
  std::string qrels;
  std::string compare;
  std::string tag = "cldrd";
  std::size_t k = 1000;
  FeaturizerOptions featurizer;
  MetricOptions metrics;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--checkpoint", checkpoint)->required();
    cmd.add_option("--collection", collection, "corpus to index");
    cmd.add_option("--index", index, "prebuilt index dump instead of --collection");
    cmd.add_option("--queries", queries)->required();
    cmd.add_option("--out", out, "TREC run file")->required();
    cmd.add_option("--k", k, "results per query")->capture_default_str();
    cmd.add_option("--tag", tag)->capture_default_str();
    cmd.add_option("--qrels", qrels, "print metrics against these judgments");
    cmd.add_option("--compare", compare, "paired t-test against this run (needs --qrels)");
    featurizer.add_to(cmd, false);
    metrics.add_to(cmd);
  }

  void run() const {
    if (collection.empty() == index.empty()) {
      throw ConfigError("give exactly one of --collection and --index");
    }
    if (!compare.empty() && qrels.empty()) throw ConfigError("--compare needs --qrels");
    if (k == 0) throw ConfigError("--k must be positive");
    const EncoderParams params = load_checkpoint(checkpoint);
    const FeaturizerConfig fc = featurizer.for_params(params);
    const DenseIndex idx =
        index.empty() ? build_index(params, load_collection(collection), fc) : load_index(index);
    if (idx.dim() != params.dim()) throw ShapeError("index width differs from the checkpoint");
    const auto run = search_all(idx, params, load_queries(queries), fc, k);
    write_run(run, tag, out);
    if (!qrels.empty()) report(run, load_qrels(qrels), metrics, compare, "");
  }
};

struct RerankCommand {
  std::string run_path;
  std::string queries;
  std::string collection;
  std::string out;
  std::string tag = "teacher";
  TeacherOptions teacher;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--run", run_path, "candidate run")->required();
    cmd.add_option("--queries", queries)->required();
    cmd.add_option("--collection", collection)->required();
    cmd.add_option("--out", out, "re-ranked TREC run")->required();
    cmd.add_option("--tag", tag)->capture_default_str();
    teacher.add_to(cmd);
  }

  void run() const {
    const Corpus corpus = load_collection(collection);
    const QuerySet qs = load_queries(queries);
    const auto t = teacher.build(corpus);
    std::vector<RankedList> reranked;
    for (const auto& list : load_run(run_path)) {
      reranked.push_back(rerank(*t, qs.at(list.query_id), list, corpus));
    }
    write_run(reranked, tag, out);
  }
};

struct EvaluateCommand {
  std::string run_path;
  std::string qrels;
  std::string compare;
  std::string per_query;
  MetricOptions metrics;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--run", run_path)->required();
    cmd.add_option("--qrels", qrels)->required();
    cmd.add_option("--compare", compare, "paired t-test against this run");
    cmd.add_option("--per-query", per_query, "write per-query values here");
    metrics.add_to(cmd);
  }

  void run() const { report(load_run(run_path), load_qrels(qrels), metrics, compare, per_query); }
};

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("cldrd");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  CLI::App app{"Curriculum-learning distillation for dense retrieval"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  SynthCommand synth;
  TrainCommand train;
  GenerateDataCommand generate;
  IndexCommand index;
  RetrieveCommand retrieve;
  RerankCommand rerank_cmd;
  EvaluateCommand evaluate;

  std::vector<std::pair<CLI::App*, std::function<void()>>> commands;
  auto add = [&](const char* name, const char* help, auto& command) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option_function<std::string>(
        "--config", [sub](const std::string& path) { apply_config_file(*sub, path); },
        "flat key = value file; command-line flags win");
    command.add_to(*sub);
    commands.emplace_back(sub, [&command] { command.run(); });
  };
  add("synth", "write a synthetic retrieval world", synth);
  add("train", "run the curriculum", train);
  add("generate-data", "dump one level's training data", generate);
  add("index", "encode a collection into an index dump", index);
  add("retrieve", "dense top-k retrieval, optionally evaluated", retrieve);
  add("rerank", "re-rank a run with a teacher", rerank_cmd);
  add("evaluate", "MRR@10, nDCG@10 and MAP@1000 of a run", evaluate);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : kExitConfig;
    }
    if (quiet) spdlog::set_level(spdlog::level::warn);
    for (auto& [sub, run] : commands) {
      if (sub->parsed()) run();
    }
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }
  return 0;
}
