#include "cldrd/kd_loss.hpp"

#include <cmath>
#include <string>

#include "cldrd/errors.hpp"

namespace cldrd {

namespace {

PairType classify(double better_label, double worse_label) {
  if (worse_label > 0.0) return PairType::head_head;
  if (better_label > 0.0) return worse_label == 0.0 ? PairType::head_hard : PairType::head_tail;
  return PairType::hard_tail;
}

void check_pair_indices(std::span<const double> scores, const PairSet& pairs) {
  for (const auto& p : pairs) {
    if (p.better >= scores.size() || p.worse >= scores.size()) {
      throw ShapeError("pair index outside the score vector of length " +
                       std::to_string(scores.size()));
    }
  }
}

}  // namespace

double pair_weight(std::size_t rank_a, std::size_t rank_b) {
  if (rank_a == 0 || rank_b == 0) throw DomainError("ranks are 1-based");
  return std::abs(1.0 / static_cast<double>(rank_a) - 1.0 / static_cast<double>(rank_b));
}

PairSet enumerate_pairs(const TrainingExample& example) {
  PairSet pairs;
  const auto& docs = example.docs;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = 0; j < docs.size(); ++j) {
      if (docs[i].label > docs[j].label) {
        pairs.push_back({i, j, pair_weight(docs[i].retrieval_rank, docs[j].retrieval_rank),
                         classify(docs[i].label, docs[j].label)});
      }
    }
  }
  return pairs;
}

std::array<std::size_t, 4> count_pair_types(const PairSet& pairs) {
  std::array<std::size_t, 4> counts{};
  for (const auto& p : pairs) ++counts[static_cast<std::size_t>(p.type) - 1];
  return counts;
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double kd_loss(std::span<const double> scores, const PairSet& pairs) {
  check_pair_indices(scores, pairs);
  double total = 0.0;
  for (const auto& p : pairs) total += p.weight * softplus(scores[p.worse] - scores[p.better]);
  return total;
}

double kd_loss(std::span<const double> scores, const TrainingExample& example) {
  if (scores.size() != example.docs.size()) {
    throw ShapeError("kd_loss: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(example.docs.size()) + " docs");
  }
  return kd_loss(scores, enumerate_pairs(example));
}

std::vector<double> kd_loss_grad(std::span<const double> scores, const PairSet& pairs) {
  check_pair_indices(scores, pairs);
  std::vector<double> grad(scores.size(), 0.0);
  for (const auto& p : pairs) {
    const double g = p.weight * sigmoid(scores[p.worse] - scores[p.better]);
    grad[p.worse] += g;
    grad[p.better] -= g;
  }
  return grad;
}

std::vector<double> kd_loss_grad(std::span<const double> scores, const TrainingExample& example) {
  if (scores.size() != example.docs.size()) {
    throw ShapeError("kd_loss_grad: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(example.docs.size()) + " docs");
  }
  return kd_loss_grad(scores, enumerate_pairs(example));
}

}  // namespace cldrd
