#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "cldrd/errors.hpp"
#include "cldrd/kd_loss.hpp"
#include "loss_oracles.hpp"

using namespace cldrd;
using cldrd::testing::GroupShape;

namespace {

TrainingExample three_docs() {
  TrainingExample ex;
  ex.query_id = "q";
  ex.docs = {{"a", 1.0, 1, 1}, {"b", 0.0, 2, 2}, {"c", -1.0, 3, 3}};
  return ex;
}

}  // namespace

TEST_CASE("pair_weight") {
  CHECK(pair_weight(1, 2) == 0.5);
  CHECK(pair_weight(3, 3) == 0.0);
  CHECK(pair_weight(2, 5) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(pair_weight(5, 2) == pair_weight(2, 5));
  CHECK_THROWS_AS(pair_weight(0, 1), DomainError);
  CHECK_THROWS_AS(pair_weight(1, 0), DomainError);
}

TEST_CASE("pair counts for the default levels") {
  std::mt19937_64 gen(1);
  const GroupShape shapes[] = {{5, 12, 13}, {10, 10, 10}, {30, 0, 0}};
  const std::size_t totals[] = {291, 345, 435};
  const std::size_t head_pairs[] = {10, 45, 435};
  for (int i = 0; i < 3; ++i) {
    const auto pairs = enumerate_pairs(cldrd::testing::random_example(shapes[i], gen));
    CHECK(pairs.size() == totals[i]);
    const auto types = count_pair_types(pairs);
    CHECK(types[0] == head_pairs[i]);
    CHECK(types[1] == shapes[i].head * shapes[i].hard);
    CHECK(types[2] == shapes[i].head * shapes[i].tail);
    CHECK(types[3] == shapes[i].hard * shapes[i].tail);
  }
}

TEST_CASE("minimal instance yields the three cross-group pairs") {
  const auto pairs = enumerate_pairs(three_docs());
  REQUIRE(pairs.size() == 3);
  std::set<std::pair<std::size_t, std::size_t>> got;
  for (const auto& p : pairs) got.insert({p.better, p.worse});
  CHECK(got == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {1, 2}});
  const auto types = count_pair_types(pairs);
  CHECK(types == std::array<std::size_t, 4>{0, 1, 1, 1});
}

TEST_CASE("enumerated pairs agree with the closed form and the label order") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 300; ++trial) {
    const GroupShape g = cldrd::testing::random_shape(gen, 1, 40);
    const auto ex = cldrd::testing::random_example(g, gen);
    const auto pairs = enumerate_pairs(ex);
    CHECK(pairs.size() == cldrd::testing::closed_form_pairs(g));
    CHECK(pairs.size() == cldrd::testing::brute_force_pair_count(ex));
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& p : pairs) {
      CHECK(ex.docs[p.better].label > ex.docs[p.worse].label);
      CHECK(p.weight >= 0.0);
      CHECK(seen.insert({p.better, p.worse}).second);
    }
  }
}

TEST_CASE("softplus and sigmoid") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(1000.0) == 1000.0);
  CHECK(softplus(-1000.0) == 0.0);
  CHECK(std::isfinite(softplus(1e308)));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-1000.0) == 0.0);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("loss fixtures") {
  const auto ex = three_docs();
  SUBCASE("saturated ordering") {
    const std::vector<double> s{100, 0, -100};
    CHECK(kd_loss(s, ex) < 1e-10);
    CHECK(cldrd::testing::brute_force_loss(s, ex) < 1e-10);
    for (double g : kd_loss_grad(s, ex)) CHECK(std::abs(g) < 1e-10);
  }
  SUBCASE("equal scores") {
    const std::vector<double> s{0, 0, 0};
    const double expected = (0.5 + 2.0 / 3.0 + 1.0 / 6.0) * std::log(2.0);
    CHECK(expected == doctest::Approx(0.924196).epsilon(1e-6));
    CHECK(kd_loss(s, ex) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(cldrd::testing::brute_force_loss(s, ex) == doctest::Approx(expected).epsilon(1e-12));
    const auto g = kd_loss_grad(s, ex);
    CHECK(g[0] == doctest::Approx(-7.0 / 12.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(g[2] == doctest::Approx(5.0 / 12.0).epsilon(1e-12));
  }
  SUBCASE("graded scores") {
    const std::vector<double> s{2, 1, 0};
    CHECK(std::abs(kd_loss(s, ex) - 0.293459) < 1e-5);
    CHECK(kd_loss(s, ex) ==
          doctest::Approx(cldrd::testing::brute_force_loss(s, ex)).epsilon(1e-12));
  }
}

TEST_CASE("shape errors") {
  const auto ex = three_docs();
  const std::vector<double> s{1, 2};
  CHECK_THROWS_AS(kd_loss(s, ex), ShapeError);
  CHECK_THROWS_AS(kd_loss_grad(s, ex), ShapeError);
  PairSet bad{{0, 5, 1.0, PairType::head_head}};
  CHECK_THROWS_AS(kd_loss(s, bad), ShapeError);
}

TEST_CASE("gradient matches central differences and sums to zero") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 2.0);
  const double h = 1e-4;
  for (int trial = 0; trial < 200; ++trial) {
    const GroupShape g = cldrd::testing::random_shape(gen, 3, 30);
    const auto ex = cldrd::testing::random_example(g, gen);
    std::vector<double> s(ex.docs.size());
    for (auto& x : s) x = normal(gen);
    const auto grad = kd_loss_grad(s, ex);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      sum += grad[i];
      auto up = s;
      auto down = s;
      up[i] += h;
      down[i] -= h;
      const double fd = (kd_loss(up, ex) - kd_loss(down, ex)) / (2 * h);
      CHECK(std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), 1e-3) < 1e-4);
    }
    CHECK(std::abs(sum) < 1e-9);
  }
}

TEST_CASE("loss is invariant to score shifts and doc permutations") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto ex = cldrd::testing::random_example(cldrd::testing::random_shape(gen, 2, 30), gen);
    std::vector<double> s(ex.docs.size());
    for (auto& x : s) x = normal(gen);
    const double base = kd_loss(s, ex);
    CHECK(base >= 0.0);
    CHECK(base == doctest::Approx(cldrd::testing::brute_force_loss(s, ex)).epsilon(1e-10));

    auto shifted = s;
    for (auto& x : shifted) x += 5.5;
    CHECK(kd_loss(shifted, ex) == doctest::Approx(base).epsilon(1e-10));

    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    TrainingExample permuted;
    std::vector<double> ps;
    for (std::size_t i : perm) {
      permuted.docs.push_back(ex.docs[i]);
      ps.push_back(s[i]);
    }
    CHECK(kd_loss(ps, permuted) == doctest::Approx(base).epsilon(1e-10));
  }
}
