#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cldrd/curriculum.hpp"

namespace cldrd {

/// Pair categories by the groups of the preferred and the other document.
enum class PairType { head_head = 1, head_hard = 2, head_tail = 3, hard_tail = 4 };

/// `better` has a strictly larger pseudo-label than `worse`.
struct DocPair {
  std::size_t better = 0;
  std::size_t worse = 0;
  double weight = 0.0;
  PairType type = PairType::head_head;
};

using PairSet = std::vector<DocPair>;

/// |1/rank_a - 1/rank_b|. Throws DomainError on a zero rank.
double pair_weight(std::size_t rank_a, std::size_t rank_b);

/// Every ordered pair with label(better) > label(worse), weighted by the
/// frozen student retrieval ranks.
PairSet enumerate_pairs(const TrainingExample& example);

/// Pair counts indexed by PairType - 1.
std::array<std::size_t, 4> count_pair_types(const PairSet& pairs);

/// log(1 + e^x) without overflow: x beyond 30 returns x, below -30 e^x.
double softplus(double x);

/// Logistic function, stable for large |x|.
double sigmoid(double x);

/// sum over pairs of w * log(1 + exp(s_worse - s_better)).
double kd_loss(std::span<const double> scores, const TrainingExample& example);
double kd_loss(std::span<const double> scores, const PairSet& pairs);

/// Gradient of kd_loss with respect to the scores, weights held constant.
std::vector<double> kd_loss_grad(std::span<const double> scores, const TrainingExample& example);
std::vector<double> kd_loss_grad(std::span<const double> scores, const PairSet& pairs);

}  // namespace cldrd
