#include "cldrd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <unordered_set>

#include <boost/math/special_functions/beta.hpp>
#include <spdlog/spdlog.h>

#include "cldrd/errors.hpp"

namespace cldrd {

namespace {

using PerQuery = std::function<std::optional<double>(const RankedList&, const Qrels::Grades&)>;

/// Applies a per-query metric over the queries shared by run and qrels.
/// The callback returns nullopt for queries it excludes.
MetricReport evaluate(const std::vector<RankedList>& run, const Qrels& qrels, std::string name,
                      std::size_t k, const PerQuery& per_query) {
  if (k == 0) throw EvalError("metric cutoff must be positive");
  MetricReport report{std::move(name), k, {}, 0.0};
  std::size_t shared = 0;
  std::size_t skipped = 0;
  std::unordered_set<std::string_view> seen;
  for (const auto& list : run) {
    if (!seen.insert(list.query_id).second) {
      throw EvalError("query " + list.query_id + " appears twice in the run");
    }
    validate(list);
    const auto* grades = qrels.for_query(list.query_id);
    if (grades == nullptr) {
      ++skipped;
      continue;
    }
    ++shared;
    if (auto value = per_query(list, *grades)) report.per_query.emplace(list.query_id, *value);
  }
  if (shared == 0) throw EvalError("run and qrels share no query ids");
  if (skipped > 0) spdlog::warn("{}: skipped {} run queries absent from qrels", report.metric, skipped);
  double sum = 0.0;
  for (const auto& [qid, v] : report.per_query) sum += v;
  report.mean = report.per_query.empty() ? 0.0 : sum / static_cast<double>(report.per_query.size());
  return report;
}

int grade_of(const Qrels::Grades& grades, const std::string& doc_id) {
  auto it = grades.find(doc_id);
  return it == grades.end() ? 0 : it->second;
}

std::size_t relevant_count(const Qrels::Grades& grades, int threshold) {
  return static_cast<std::size_t>(std::count_if(
      grades.begin(), grades.end(), [&](const auto& kv) { return kv.second >= threshold; }));
}

double gain_of(int grade, Gain gain) {
  return gain == Gain::linear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
}

void print_line(std::ostream& out, const std::string& a, std::size_t cutoff, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out << a << '\t' << cutoff << '\t' << buf << '\n';
}

}  // namespace

MetricReport mrr_at_k(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k,
                      int rel_threshold) {
  return evaluate(run, qrels, "mrr", k,
                  [&](const RankedList& list, const Qrels::Grades& grades) -> std::optional<double> {
                    if (relevant_count(grades, rel_threshold) == 0) return std::nullopt;
                    const std::size_t depth = std::min(k, list.size());
                    for (std::size_t i = 0; i < depth; ++i) {
                      if (grade_of(grades, list.entries[i].doc_id) >= rel_threshold) {
                        return 1.0 / static_cast<double>(i + 1);
                      }
                    }
                    return 0.0;
                  });
}

MetricReport ndcg_at_k(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k,
                       Gain gain) {
  return evaluate(run, qrels, "ndcg", k,
                  [&](const RankedList& list, const Qrels::Grades& grades) -> std::optional<double> {
                    std::vector<int> ideal;
                    for (const auto& [doc, g] : grades) {
                      if (g > 0) ideal.push_back(g);
                    }
                    if (ideal.empty()) return std::nullopt;
                    std::sort(ideal.begin(), ideal.end(), std::greater<>());
                    double idcg = 0.0;
                    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
                      idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i + 2));
                    }
                    double dcg = 0.0;
                    for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
                      dcg += gain_of(grade_of(grades, list.entries[i].doc_id), gain) /
                             std::log2(static_cast<double>(i + 2));
                    }
                    return dcg / idcg;
                  });
}

MetricReport map_at_k(const std::vector<RankedList>& run, const Qrels& qrels, std::size_t k,
                      int rel_threshold) {
  return evaluate(run, qrels, "map", k,
                  [&](const RankedList& list, const Qrels::Grades& grades) -> std::optional<double> {
                    const std::size_t total = relevant_count(grades, rel_threshold);
                    if (total == 0) return std::nullopt;
                    double sum = 0.0;
                    std::size_t hits = 0;
                    for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
                      if (grade_of(grades, list.entries[i].doc_id) >= rel_threshold) {
                        ++hits;
                        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
                      }
                    }
                    return sum / static_cast<double>(total);
                  });
}

double students_t_two_tailed(double t, double dof) {
  if (std::isnan(t) || !(dof > 0.0)) throw EvalError("invalid t statistic or degrees of freedom");
  if (std::isinf(t)) return 0.0;
  // P(|T| > t) = I_x(dof/2, 1/2) with x = dof / (dof + t^2).
  const double x = dof / (dof + t * t);
  return boost::math::ibeta(dof / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b) {
  std::vector<double> diffs;
  for (const auto& [qid, va] : a) {
    auto it = b.find(qid);
    if (it != b.end()) diffs.push_back(va - it->second);
  }
  if (diffs.size() < 2) throw EvalError("paired t-test needs at least 2 common queries");
  TTestResult result;
  result.n = diffs.size();
  const double n = static_cast<double>(diffs.size());
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= n;
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    if (mean == 0.0) return result;
    // Constant non-zero difference: unbounded statistic.
    result.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    result.p = 0.0;
    return result;
  }
  result.t = mean / (sd / std::sqrt(n));
  result.p = students_t_two_tailed(result.t, n - 1.0);
  return result;
}

void write_report(const std::vector<MetricReport>& reports, std::ostream& out) {
  for (const auto& r : reports) print_line(out, r.metric, r.cutoff, r.mean);
}

void write_per_query(const std::vector<MetricReport>& reports, std::ostream& out) {
  for (const auto& r : reports) {
    for (const auto& [qid, v] : r.per_query) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << r.metric << '\t' << r.cutoff << '\t' << qid << '\t' << buf << '\n';
    }
  }
}

}  // namespace cldrd
