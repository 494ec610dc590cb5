#include <cstdio>
#include <fstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "clcp/io.hpp"

using namespace clcp;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& contents = "") : path(name) {
    if (!contents.empty()) {
      std::ofstream out(path, std::ios::binary);
      out << contents;
    }
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("jsonl datasets round trip for every record kind") {
  Dataset ds;
  SECTION("class probs") {
    ds.kind = RecordKind::class_probs;
    ds.records.push_back({"a", ClassProbsPayload{ClassProbs({0.7, 0.2, 0.1}), 2}});
    ds.records.push_back({"b", ClassProbsPayload{ClassProbs({0.1, 0.1, 0.8}), 3}});
  }
  SECTION("prob grid") {
    Field f(2, 2);
    f.data = {0.9, 0.1, 0.4, 0.6};
    GridMask m(2, 2);
    m.cells = {1, 0, 0, 1};
    ds.kind = RecordKind::prob_grid;
    ds.records.push_back({"g1", ProbGridPayload{ProbGrid(f), m}});
  }
  SECTION("quantile triple") {
    Field q05(2, 2), q50(2, 2), q95(2, 2), y(2, 2);
    q05.data = {0.0, 1.0, 2.0, 3.0};
    q50.data = {1.0, 2.0, 3.0, 4.0};
    q95.data = {2.0, 3.0, 4.0, 5.0};
    y.data = {1.5, 1.9, 3.2, 4.4};
    ds.kind = RecordKind::quantile_triple;
    ds.records.push_back({"t1", QuantileTriplePayload{QuantileTripleGrid(q05, q50, q95), y}});
  }
  SECTION("explicit sets") {
    ds.kind = RecordKind::explicit_sets;
    ds.records.push_back(
        {"s1", ExplicitSetsPayload{{LabelSet(), LabelSet({1}), LabelSet({1, 2})}, 1}});
  }
  TempFile tmp("io_roundtrip.jsonl");
  save_dataset(tmp.path, ds);
  auto back = load_dataset(tmp.path);
  REQUIRE(back.kind == ds.kind);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.records[i].id == ds.records[i].id);
    CHECK(record_to_json(back.records[i]) == record_to_json(ds.records[i]));
  }
}

TEST_CASE("malformed lines fail with the file position") {
  TempFile tmp("io_bad.jsonl",
               R"({"id":"ok","kind":"CLASS_PROBS","payload":{"probs":[0.5,0.5]},"label":1})"
               "\nnot json at all\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected a parse error");
  } catch (const error& e) {
    CHECK(e.code() == errc::parse_error);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("invariant violations name the offending record") {
  TempFile tmp("io_badprob.jsonl",
               R"({"id":"broken","kind":"CLASS_PROBS","payload":{"probs":[0.9,0.6]},"label":1})"
               "\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
}

TEST_CASE("mixed record kinds are rejected") {
  TempFile tmp("io_mixed.jsonl",
               R"({"id":"a","kind":"CLASS_PROBS","payload":{"probs":[0.5,0.5]},"label":1})"
               "\n"
               R"({"id":"b","kind":"PROB_GRID","payload":{"values":[[0.5,0.5],[0.5,0.5]]},"label":[[1,0],[0,1]]})"
               "\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::kind_mismatch);
  }
}

TEST_CASE("expected-kind mismatch is rejected up front") {
  TempFile tmp("io_kind.jsonl",
               R"({"id":"a","kind":"CLASS_PROBS","payload":{"probs":[0.5,0.5]},"label":1})"
               "\n");
  CHECK_THROWS_AS(load_dataset(tmp.path, RecordKind::prob_grid), error);
  CHECK_NOTHROW(load_dataset(tmp.path, RecordKind::class_probs));
}

TEST_CASE("cross-record dimension drift is rejected") {
  TempFile tmp("io_dims.jsonl",
               R"({"id":"a","kind":"CLASS_PROBS","payload":{"probs":[0.5,0.5]},"label":1})"
               "\n"
               R"({"id":"c","kind":"CLASS_PROBS","payload":{"probs":[0.3,0.3,0.4]},"label":2})"
               "\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::dimension_mismatch);
    CHECK(std::string(e.what()).find("'c'") != std::string::npos);
  }
}

TEST_CASE("grid payloads cross-check label shapes") {
  TempFile tmp("io_shape.jsonl",
               R"({"id":"g","kind":"PROB_GRID","payload":{"values":[[0.5,0.5],[0.5,0.5]]},"label":[[1,0]]})"
               "\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected an error");
  } catch (const error& e) {
    CHECK(e.code() == errc::dimension_mismatch);
    CHECK(std::string(e.what()).find("'g'") != std::string::npos);
  }
}

TEST_CASE("empty and missing files are errors") {
  TempFile tmp("io_empty.jsonl", "\n  \n");
  CHECK_THROWS_AS(load_dataset(tmp.path), error);
  CHECK_THROWS_AS(load_dataset("does_not_exist.jsonl"), error);
}

TEST_CASE("grid spec parsing") {
  auto g = parse_grid_spec("0:1:0.01");
  CHECK(g.size() == 101);
  CHECK(g.front() == 0.0);
  auto g2 = parse_grid_spec("-0.002:1.002:0.001");
  CHECK(g2.front() == -0.002);
  CHECK_THROWS_AS(parse_grid_spec("0,1,0.01"), error);
  CHECK_THROWS_AS(parse_grid_spec("nonsense"), error);
  CHECK_THROWS_AS(parse_grid_spec("1:0:0.01"), error);
}

TEST_CASE("plot csv has the expected rows and line endings") {
  std::vector<TrialReport> reports(2);
  reports[0].alpha = 0.1;
  reports[0].delta = 0.05;
  reports[0].exceedance_frequency = 0.04;
  reports[0].mean_loss = 0.03;
  reports[0].efficiency = 1.5;
  reports[1].alpha = 0.2;
  reports[1].delta = 0.1;
  reports[1].exceedance_frequency = 0.09;
  reports[1].mean_loss = 0.07;
  reports[1].efficiency = 1.25;
  TempFile tmp("io_plot.csv");
  write_plot_csv(tmp.path, reports);
  auto text = slurp(tmp.path);
  CHECK(text ==
        "alpha,delta,exceedance_frequency,mean_loss,efficiency\r\n"
        "0.1,0.05,0.04,0.03,1.5\r\n"
        "0.2,0.1,0.09,0.07,1.25\r\n");
}

TEST_CASE("trials csv has one row per trial") {
  std::vector<TrialRecord> records = {{0.5, 0.0, 2.0, true}, {0.6, 1.0, 3.0, false}};
  TempFile tmp("io_trials.csv");
  write_trials_csv(tmp.path, records);
  auto text = slurp(tmp.path);
  CHECK(text ==
        "trial,lambda_star,test_loss,efficiency,feasible\r\n"
        "0,0.5,0,2,1\r\n"
        "1,0.6,1,3,0\r\n");
}

TEST_CASE("calibration result and trial report serialize") {
  CalibrationResult r{0.5, 0.2, true, 2};
  auto j = to_json(r);
  CHECK(j["lambda_star"] == 0.5);
  CHECK(j["feasible"] == true);
  TrialReport tr;
  tr.alpha = 0.1;
  tr.trials = 10;
  auto jt = to_json(tr);
  CHECK(jt["trials"] == 10);
  CHECK(jt["alpha"] == 0.1);
}
