#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cldrd/data_model.hpp"

namespace cldrd {

struct MetricReport {
  std::string metric;
  std::size_t cutoff = 0;
  std::map<std::string, double> per_query;
  double mean = 0.0;
};

enum class Gain { linear, exponential };

/// Reciprocal rank of the first doc with grade >= rel_threshold in the top k.
/// Queries without any judged-relevant doc are left out.
MetricReport mrr_at_k(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k = 10,
                      int rel_threshold = 1);

/// DCG over the top k divided by the ideal DCG of the judged grades.
/// Queries whose grades are all zero are left out.
MetricReport ndcg_at_k(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k = 10,
                       Gain gain = Gain::linear);

/// Average precision over the top k, normalized by every judged-relevant doc.
MetricReport map_at_k(const std::vector<RankedList>& run, const Qrels& qrels,
                      std::size_t k = 1000, int rel_threshold = 1);

struct TTestResult {
  std::size_t n = 0;
  double t = 0.0;
  double p = 1.0;
};

/// Two-tailed paired t-test over the query ids present in both maps.
/// Throws EvalError with fewer than two common queries.
TTestResult paired_t_test(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b);

/// Two-tailed tail probability of Student's t.
double students_t_two_tailed(double t, double dof);

/// `metric<TAB>cutoff<TAB>mean` lines.
void write_report(const std::vector<MetricReport>& reports, std::ostream& out);
/// `metric<TAB>cutoff<TAB>qid<TAB>value` lines.
void write_per_query(const std::vector<MetricReport>& reports, std::ostream& out);

}  // namespace cldrd
