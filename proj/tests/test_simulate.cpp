#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "clcp/losses.hpp"
#include "clcp/predictors.hpp"
#include "clcp/simulate.hpp"

using namespace clcp;

TEST_CASE("classification generator is deterministic and balanced") {
  auto a = gen_classification(99, 1000, 3, 4, 2.0);
  auto b = gen_classification(99, 1000, 3, 4, 2.0);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.class_losses == b.class_losses);

  auto c = gen_classification(100, 1000, 3, 4, 2.0);
  CHECK(a.labels != c.labels);

  // Multinomial(1000, 1/3): each class frequency within 0.28..0.39.
  std::array<std::size_t, 3> counts{};
  for (int y : a.labels) ++counts[static_cast<std::size_t>(y - 1)];
  for (auto cnt : counts) {
    double freq = static_cast<double>(cnt) / 1000.0;
    CHECK(freq > 0.28);
    CHECK(freq < 0.39);
  }
  for (double l : a.class_losses) {
    CHECK(l > 0.0);
    CHECK(l < 1.0);
  }
  CHECK_THROWS_AS(gen_classification(1, 10, 1, 4, 2.0), error);
}

TEST_CASE("grid field generator filters out event-free samples") {
  auto ds = gen_grid_fields(7, 50, 8, 8, 2, 1.0);
  auto ds2 = gen_grid_fields(7, 50, 8, 8, 2, 1.0);
  REQUIRE(ds.inputs.size() == 50);
  for (std::size_t s = 0; s < 50; ++s) {
    CHECK(ds.events[s].count() >= 1);
    CHECK(ds.inputs[s].data == ds2.inputs[s].data);
    // Events restate the label threshold rule.
    for (std::size_t c = 0; c < 64; ++c)
      CHECK(ds.events[s].cells[c] == (ds.labels[s].data[c] >= 1.0 ? 1 : 0));
  }
  SECTION("an unreachable threshold exhausts the filter") {
    CHECK_THROWS_AS(gen_grid_fields(7, 5, 4, 4, 2, 50.0), error);
  }
  SECTION("a trivially low threshold keeps every draw") {
    auto easy = gen_grid_fields(7, 10, 4, 4, 2, -100.0);
    for (const auto& m : easy.events) CHECK(m.count() == 16);
  }
}

TEST_CASE("classification rig loss matches the predictor/loss composition") {
  auto ds = gen_classification(11, 300, 3, 4, 2.0);
  auto rig = prepare_classification(ds, 100, 0.5, 60);
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t i = static_cast<std::size_t>(rng.below(200));
    double lambda = rng.uniform01();
    ClassProbs probs(rig.probs[i]);
    auto set = threshold_label_set(probs, lambda);
    int y = ds.labels[100 + i];
    double slow = class_varying_loss(y, set, rig.table);
    CHECK(classification_pool_loss(rig, i, lambda) == slow);
    CHECK(classification_set_size(rig, i, lambda) == static_cast<double>(set.size()));
  }
}

TEST_CASE("segmentation rig loss rows match fnr over segmentation sets") {
  auto ds = gen_grid_fields(13, 60, 6, 6, 2, 1.0);
  auto grid = LambdaGrid::arithmetic(0.0, 1.0, 0.05);
  auto rig = prepare_segmentation(ds, 20, grid, 0.5, 30);
  for (std::size_t i = 0; i < 40; ++i) {
    Field f(6, 6);
    f.data = rig.probs[i];
    ProbGrid pg(std::move(f));
    for (std::size_t j = 0; j < grid.size(); ++j) {
      double slow = fnr_loss(ds.events[20 + i], grid_segmentation_set(pg, grid[j]));
      CHECK_THAT(rig.loss_rows[i][j], Catch::Matchers::WithinAbs(slow, 1e-12));
    }
  }
}

TEST_CASE("band rig loss matches the band miscoverage rate") {
  auto ds = gen_grid_fields(17, 40, 4, 4, 2, 1.0);
  auto rig = prepare_band(ds, 15, 0.2, 150);
  Rng rng(2);
  for (std::size_t i = 0; i < 25; ++i) {
    Field q05(4, 4), q50(4, 4), q95(4, 4);
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t q = 0; q < 4; ++q) {
        auto t = rig.model.predict(cell_features(ds.inputs[15 + i], p, q));
        q05.at(p, q) = t.q05;
        q50.at(p, q) = t.q50;
        q95.at(p, q) = t.q95;
      }
    }
    QuantileTripleGrid triple(q05, q50, q95);
    auto scale = BandScale::from_triple(triple);
    for (int rep = 0; rep < 8; ++rep) {
      double lambda = rng.uniform(0.0, 5.0);
      // Skip lambdas sitting on a per-cell critical value: the fast path
      // compares the precomputed ratio while the slow path compares the
      // reconstructed endpoints, and the two can round differently at ties.
      bool boundary = false;
      for (double c : rig.sorted_crit[i])
        if (std::fabs(c - lambda) < 1e-9) boundary = true;
      if (boundary) continue;
      double slow = band_miscoverage_rate(ds.labels[15 + i],
                                          band_from_quantiles(triple, scale, lambda));
      CHECK(band_pool_loss(rig, i, lambda) == slow);
    }
  }
}

TEST_CASE("classification trials honor the exceedance guarantee at small scale") {
  auto ds = gen_classification(21, 800, 3, 4, 2.0);
  auto rig = prepare_classification(ds, 200, 0.5, 100);
  auto grid = LambdaGrid::arithmetic(0.0, 1.0, 0.01);
  ControlConfig control{0.1, 0.1};
  auto report = run_classification_trials(rig, grid, control, 100, 500, 5);
  CHECK(report.trials + report.infeasible_count == 500);
  REQUIRE(report.trials > 0);
  // 3-sigma band around delta at 500 trials.
  double slack = 3.0 * std::sqrt(0.1 * 0.9 / 500.0);
  CHECK(report.exceedance_frequency <= 0.1 + slack);
  CHECK(report.mean_loss <= control.alpha + slack);

  SECTION("alpha at the bound makes every trial succeed") {
    auto easy = run_classification_trials(rig, grid, {1.0, 0.1}, 100, 100, 5);
    CHECK(easy.exceedance_count == 0);
    CHECK(easy.infeasible_count == 0);
  }
  SECTION("reports are reproducible and order-free per seed") {
    auto again = run_classification_trials(rig, grid, control, 100, 500, 5);
    CHECK(again.exceedance_count == report.exceedance_count);
    CHECK(again.mean_loss == report.mean_loss);
    CHECK(again.efficiency == report.efficiency);
    // First 10 trials alone reproduce the first 10 per-trial records.
    std::vector<TrialRecord> full, head;
    run_classification_trials(rig, grid, control, 100, 500, 5, &full);
    run_classification_trials(rig, grid, control, 100, 10, 5, &head);
    for (std::size_t t = 0; t < 10; ++t) {
      CHECK(full[t].lambda_star == head[t].lambda_star);
      CHECK(full[t].test_loss == head[t].test_loss);
    }
  }
}

TEST_CASE("crc trials control the mean loss at small scale") {
  auto ds = gen_classification(23, 800, 3, 4, 2.0);
  auto rig = prepare_classification(ds, 200, 0.5, 100);
  auto grid = LambdaGrid::arithmetic(0.0, 1.0, 0.01);
  auto report = run_classification_crc_trials(rig, grid, 0.1, 100, 500, 6);
  REQUIRE(report.trials > 0);
  CHECK(report.mean_loss <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 500.0));
}

TEST_CASE("segmentation trials honor the exceedance guarantee at small scale") {
  auto ds = gen_grid_fields(25, 300, 8, 8, 2, 1.0);
  auto rig = prepare_segmentation(ds, 60, LambdaGrid::arithmetic(0.0, 1.0, 0.01), 0.5, 40);
  auto report = run_segmentation_trials(rig, {0.2, 0.1}, 80, 400, 7);
  CHECK(report.trials + report.infeasible_count == 400);
  REQUIRE(report.trials > 0);
  CHECK(report.exceedance_frequency <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 400.0));
}

TEST_CASE("band trials honor the exceedance guarantee at small scale") {
  auto ds = gen_grid_fields(27, 300, 4, 4, 2, 1.0);
  auto rig = prepare_band(ds, 60, 0.2, 150);
  std::vector<double> ladder = {100.0, 10.0, 1.0, 0.1, 0.01};
  auto report = run_band_trials(rig, {0.2, 0.1}, ladder, 100, 80, 400, 8);
  CHECK(report.trials + report.infeasible_count == 400);
  REQUIRE(report.trials > 0);
  CHECK(report.exceedance_frequency <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 400.0));
  auto again = run_band_trials(rig, {0.2, 0.1}, ladder, 100, 80, 400, 8);
  CHECK(again.exceedance_count == report.exceedance_count);
  CHECK(again.efficiency == report.efficiency);
}

TEST_CASE("cp equivalence checker") {
  Rng rng(31);
  std::vector<std::vector<double>> sets;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s(50);
    for (auto& v : s) v = rng.uniform01();
    sets.push_back(std::move(s));
  }
  auto grid = LambdaGrid::arithmetic(-0.002, 1.002, 1e-3);
  CHECK(cp_equivalence_check(sets, 0.1, grid) <= 1e-3 + 1e-12);

  SECTION("a grid that fails to cover the scores is rejected") {
    std::vector<std::vector<double>> bad = {{0.1, 0.9}};
    CHECK_THROWS_AS(cp_equivalence_check(bad, 0.1, LambdaGrid::arithmetic(0.2, 0.8, 0.1)),
                    error);
  }
  SECTION("empty inputs are rejected") {
    CHECK_THROWS_AS(cp_equivalence_check({}, 0.1, grid), error);
    CHECK_THROWS_AS(cp_equivalence_check({{}}, 0.1, grid), error);
  }
}
