#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "clcp/core.hpp"
#include "clcp/losses.hpp"
#include "clcp/predictors.hpp"
#include "clcp/random.hpp"

using namespace clcp;

TEST_CASE("lambda grid invariants") {
  CHECK_THROWS_AS(LambdaGrid({}), error);
  CHECK_THROWS_AS(LambdaGrid({0.0, 0.0}), error);
  CHECK_THROWS_AS(LambdaGrid({1.0, 0.5}), error);
  CHECK_THROWS_AS(LambdaGrid({0.0, 0.3, 0.5}, 0.3), error);
  auto g = LambdaGrid::arithmetic(0.0, 1.0, 0.01);
  CHECK(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK_THAT(g.back(), Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE(g.step().has_value());
}

TEST_CASE("control config bounds") {
  CHECK_THROWS_AS((ControlConfig{0.1, 0.0}).validate(), error);
  CHECK_THROWS_AS((ControlConfig{0.1, 1.0}).validate(), error);
  CHECK_NOTHROW((ControlConfig{0.1, 0.5}).validate());
}

TEST_CASE("loss matrix validation reports violations") {
  SECTION("monotone row passes") {
    LossMatrix m({{1.0, 0.5, 0.0}}, 1.0, LambdaGrid({0.0, 0.5, 1.0}));
    CHECK(validate_loss_matrix(m).empty());
  }
  SECTION("explicit inversion is located") {
    LossMatrix m({{0.2, 0.4}}, 1.0, LambdaGrid({0.0, 1.0}));
    auto report = validate_loss_matrix(m);
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == LossMatrixViolation::Kind::inversion);
    CHECK(report[0].row == 0);
    CHECK(report[0].col == 0);
    CHECK(report[0].col_next == 1);
  }
  SECTION("bound violations are counted per entry") {
    LossMatrix m({{0.5, 0.5, 0.5}}, 0.4, LambdaGrid({0.0, 0.5, 1.0}));
    auto report = validate_loss_matrix(m);
    std::size_t out_of_range = 0;
    for (const auto& v : report)
      if (v.kind == LossMatrixViolation::Kind::out_of_range) ++out_of_range;
    CHECK(out_of_range == 3);
  }
}

TEST_CASE("check_nesting on the threshold family is clean") {
  ClassProbs probs({0.6, 0.4});
  LambdaGrid grid({0.0, 0.5, 1.0});
  auto report = check_nesting<LabelSet>(
      [&](double l) { return threshold_label_set(probs, l); },
      [&](const LabelSet& s) { return miscoverage_loss(1, s); }, grid);
  CHECK(report.empty());
}

TEST_CASE("check_nesting flags an adversarial predictor") {
  LambdaGrid grid({0.0, 1.0});
  auto report = check_nesting<LabelSet>(
      [&](double l) { return l < 0.5 ? LabelSet({1}) : LabelSet(std::vector<int>{}); },
      [&](const LabelSet& s) { return miscoverage_loss(1, s); }, grid);
  REQUIRE(report.size() == 1);
  CHECK(report[0].set_violation);
  CHECK(report[0].grid_index == 0);
}

TEST_CASE("check_nesting on segmentation sets over a random grid") {
  Rng rng(3);
  Field f(5, 5);
  for (auto& v : f.data) v = rng.uniform01();
  ProbGrid grid_probs(std::move(f));
  GridMask truth(5, 5);
  truth.at(2, 2) = 1;
  auto lambda_grid = LambdaGrid::arithmetic(0.0, 1.0, 0.1);
  auto report = check_nesting<GridMask>(
      [&](double l) { return grid_segmentation_set(grid_probs, l); },
      [&](const GridMask& m) { return fnr_loss(truth, m); }, lambda_grid);
  CHECK(report.empty());
}

TEST_CASE("set nesting holds for every built-in family by enumeration") {
  Rng rng(5);
  auto lambda_grid = LambdaGrid::arithmetic(0.0, 1.0, 0.1);
  for (int rep = 0; rep < 50; ++rep) {
    // Label families up to K=10.
    std::size_t K = 2 + rng.below(9);
    std::vector<double> raw(K);
    double sum = 0.0;
    for (auto& v : raw) {
      v = rng.uniform_open01();
      sum += v;
    }
    for (auto& v : raw) v /= sum;
    ClassProbs probs(raw);
    std::vector<double> scores(K);
    for (auto& s : scores) s = rng.uniform(0.0, 2.0);
    for (std::size_t j = 0; j + 1 < lambda_grid.size(); ++j) {
      CHECK(LabelSet::subset(threshold_label_set(probs, lambda_grid[j]),
                             threshold_label_set(probs, lambda_grid[j + 1])));
      CHECK(LabelSet::subset(nonconformity_label_set(scores, lambda_grid[j]),
                             nonconformity_label_set(scores, lambda_grid[j + 1])));
    }
    // Grid families up to 8x8.
    std::size_t P = 2 + rng.below(7), Q = 2 + rng.below(7);
    Field f(P, Q);
    for (auto& v : f.data) v = rng.uniform01();
    ProbGrid pg(std::move(f));
    for (std::size_t j = 0; j + 1 < lambda_grid.size(); ++j) {
      CHECK(GridMask::subset(grid_segmentation_set(pg, lambda_grid[j]),
                             grid_segmentation_set(pg, lambda_grid[j + 1])));
    }
  }
}

TEST_CASE("losses never increase when the prediction set grows") {
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t K = 2 + rng.below(9);
    // Random nested label pair.
    std::vector<int> small, big;
    for (std::size_t k = 1; k <= K; ++k) {
      if (rng.below(2)) {
        big.push_back(static_cast<int>(k));
        if (rng.below(2)) small.push_back(static_cast<int>(k));
      }
    }
    LabelSet s1(small), s2(big);
    int label = 1 + static_cast<int>(rng.below(K));
    CHECK(miscoverage_loss(label, s2) <= miscoverage_loss(label, s1));
    CHECK(miscoverage_loss(label, s1) <= 1.0);
    std::vector<double> penalties(K);
    for (auto& p : penalties) p = rng.uniform_open01();
    ClassLossTable table(penalties);
    CHECK(class_varying_loss(label, s2, table) <= class_varying_loss(label, s1, table));

    // Random nested mask pair with nonempty truth.
    std::size_t P = 2 + rng.below(5), Q = 2 + rng.below(5);
    GridMask m1(P, Q), m2(P, Q), truth(P, Q);
    for (std::size_t i = 0; i < m1.cells.size(); ++i) {
      m2.cells[i] = rng.below(2) ? 1 : 0;
      m1.cells[i] = m2.cells[i] && rng.below(2) ? 1 : 0;
      truth.cells[i] = rng.below(3) == 0 ? 1 : 0;
    }
    truth.cells[0] = 1;
    CHECK(fnr_loss(truth, m2) <= fnr_loss(truth, m1));
    CHECK(fnr_loss(truth, m1) <= 1.0);
  }
}

TEST_CASE("quantile triples are sorted at construction and idempotently so") {
  Field a(1, 2), b(1, 2), c(1, 2);
  a.data = {3.0, 1.0};
  b.data = {1.0, 5.0};
  c.data = {2.0, 0.5};
  QuantileTripleGrid t(a, b, c);
  CHECK(t.q05().data == std::vector<double>{1.0, 0.5});
  CHECK(t.q50().data == std::vector<double>{2.0, 1.0});
  CHECK(t.q95().data == std::vector<double>{3.0, 5.0});
  QuantileTripleGrid again(t.q05(), t.q50(), t.q95());
  CHECK(again.q05().data == t.q05().data);
  CHECK(again.q50().data == t.q50().data);
  CHECK(again.q95().data == t.q95().data);
}

TEST_CASE("band rejects crossed endpoints, label set dedups") {
  Field lo(1, 1), hi(1, 1);
  lo.data = {2.0};
  hi.data = {1.0};
  CHECK_THROWS_AS(Band(lo, hi), error);
  LabelSet s({3, 1, 3, 2});
  CHECK(s.members() == std::vector<int>{1, 2, 3});
  CHECK(LabelSet::full(4).size() == 4);
}

TEST_CASE("class probs invariants") {
  CHECK_THROWS_AS(ClassProbs({0.5, 0.3}), error);
  CHECK_THROWS_AS(ClassProbs({1.2, -0.2}), error);
  CHECK_NOTHROW(ClassProbs({0.7, 0.2, 0.1}));
}
