#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "clcp/core.hpp"
#include "clcp/error.hpp"
#include "clcp/simulate.hpp"

namespace clcp {

// ---------------------------------------------------------------------------
// Score records: one JSON object per line, self-describing payloads.
// ---------------------------------------------------------------------------

enum class RecordKind { class_probs, prob_grid, quantile_triple, explicit_sets };

inline const char* record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::class_probs: return "CLASS_PROBS";
    case RecordKind::prob_grid: return "PROB_GRID";
    case RecordKind::quantile_triple: return "QUANTILE_TRIPLE";
    case RecordKind::explicit_sets: return "EXPLICIT_SETS";
  }
  return "UNKNOWN";
}

inline RecordKind record_kind_from_name(const std::string& s) {
  if (s == "CLASS_PROBS") return RecordKind::class_probs;
  if (s == "PROB_GRID") return RecordKind::prob_grid;
  if (s == "QUANTILE_TRIPLE") return RecordKind::quantile_triple;
  if (s == "EXPLICIT_SETS") return RecordKind::explicit_sets;
  throw error(errc::parse_error, "unknown record kind '" + s + "'");
}

struct ClassProbsPayload {
  ClassProbs probs{std::vector<double>{1.0}};
  int label = 1;  // 1-based class index
};

struct ProbGridPayload {
  ProbGrid grid;
  GridMask truth;
};

struct QuantileTriplePayload {
  QuantileTripleGrid triple;
  Field truth;
};

// Explicitly enumerated label sets, one per grid point; lets files describe
// arbitrary (possibly non-nested) predictors for the nesting checker.
struct ExplicitSetsPayload {
  std::vector<LabelSet> sets;
  int label;
};

struct ScoreRecord {
  std::string id;
  std::variant<ClassProbsPayload, ProbGridPayload, QuantileTriplePayload, ExplicitSetsPayload>
      payload;

  RecordKind kind() const { return static_cast<RecordKind>(payload.index()); }
};

struct Dataset {
  RecordKind kind = RecordKind::class_probs;
  std::vector<ScoreRecord> records;
  std::size_t size() const { return records.size(); }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization helpers.
// ---------------------------------------------------------------------------

namespace detail {

inline Field field_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw error(errc::parse_error, "expected a 2-d array");
  Field f(j.size(), j[0].size());
  for (std::size_t p = 0; p < f.rows; ++p) {
    if (j[p].size() != f.cols) throw error(errc::dimension_mismatch, "ragged 2-d array");
    for (std::size_t q = 0; q < f.cols; ++q) f.at(p, q) = j[p][q].get<double>();
  }
  return f;
}

inline nlohmann::json field_to_json(const Field& f) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t p = 0; p < f.rows; ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t q = 0; q < f.cols; ++q) row.push_back(f.at(p, q));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline GridMask mask_from_json(const nlohmann::json& j) {
  Field f = field_from_json(j);
  GridMask m(f.rows, f.cols);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    double v = f.data[i];
    if (v != 0.0 && v != 1.0) throw error(errc::parse_error, "mask cells must be 0 or 1");
    m.cells[i] = v != 0.0 ? 1 : 0;
  }
  return m;
}

inline nlohmann::json mask_to_json(const GridMask& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t p = 0; p < m.rows; ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t q = 0; q < m.cols; ++q) row.push_back(static_cast<int>(m.at(p, q)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline ScoreRecord record_from_json(const nlohmann::json& j) {
  ScoreRecord rec;
  rec.id = j.at("id").get<std::string>();
  RecordKind kind = record_kind_from_name(j.at("kind").get<std::string>());
  const auto& payload = j.at("payload");
  switch (kind) {
    case RecordKind::class_probs:
      rec.payload = ClassProbsPayload{
          ClassProbs(payload.at("probs").get<std::vector<double>>()), j.at("label").get<int>()};
      break;
    case RecordKind::prob_grid:
      rec.payload = ProbGridPayload{ProbGrid(detail::field_from_json(payload.at("values"))),
                                    detail::mask_from_json(j.at("label"))};
      break;
    case RecordKind::quantile_triple:
      rec.payload = QuantileTriplePayload{
          QuantileTripleGrid(detail::field_from_json(payload.at("q05")),
                             detail::field_from_json(payload.at("q50")),
                             detail::field_from_json(payload.at("q95"))),
          detail::field_from_json(j.at("label"))};
      break;
    case RecordKind::explicit_sets: {
      std::vector<LabelSet> sets;
      for (const auto& s : payload.at("sets"))
        sets.push_back(LabelSet(s.get<std::vector<int>>()));
      rec.payload = ExplicitSetsPayload{std::move(sets), j.at("label").get<int>()};
      break;
    }
  }
  // Cross-check payload/label dimensions where both are grids.
  if (auto* p = std::get_if<ProbGridPayload>(&rec.payload)) {
    if (p->grid.rows() != p->truth.rows || p->grid.cols() != p->truth.cols)
      throw error(errc::dimension_mismatch, "label mask shape differs from grid");
  } else if (auto* p2 = std::get_if<QuantileTriplePayload>(&rec.payload)) {
    if (!p2->truth.same_shape(p2->triple.q50()))
      throw error(errc::dimension_mismatch, "label field shape differs from triple");
  }
  return rec;
}

inline nlohmann::json record_to_json(const ScoreRecord& rec) {
  nlohmann::json j;
  j["id"] = rec.id;
  j["kind"] = record_kind_name(rec.kind());
  if (const auto* p = std::get_if<ClassProbsPayload>(&rec.payload)) {
    j["payload"] = {{"probs", p->probs.values()}};
    j["label"] = p->label;
  } else if (const auto* g = std::get_if<ProbGridPayload>(&rec.payload)) {
    j["payload"] = {{"values", detail::field_to_json(g->grid.values())}};
    j["label"] = detail::mask_to_json(g->truth);
  } else if (const auto* q = std::get_if<QuantileTriplePayload>(&rec.payload)) {
    j["payload"] = {{"q05", detail::field_to_json(q->triple.q05())},
                    {"q50", detail::field_to_json(q->triple.q50())},
                    {"q95", detail::field_to_json(q->triple.q95())}};
    j["label"] = detail::field_to_json(q->truth);
  } else if (const auto* s = std::get_if<ExplicitSetsPayload>(&rec.payload)) {
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& set : s->sets) sets.push_back(set.members());
    j["payload"] = {{"sets", std::move(sets)}};
    j["label"] = s->label;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Dataset files: UTF-8 JSON-lines, one ScoreRecord per line.
// ---------------------------------------------------------------------------

inline Dataset load_dataset(const std::string& path,
                            std::optional<RecordKind> expected = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw error(errc::parse_error, "cannot open " + path);
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ScoreRecord rec;
    std::string rec_id;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("id") && j["id"].is_string()) rec_id = j["id"].get<std::string>();
      rec = record_from_json(j);
    } catch (const error& e) {
      throw error(e.code(), path + ":" + std::to_string(line_no) + ": record '" + rec_id +
                                "': " + e.what());
    } catch (const std::exception& e) {
      throw error(errc::parse_error,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (ds.records.empty()) {
      ds.kind = rec.kind();
      if (expected && *expected != ds.kind)
        throw error(errc::kind_mismatch, path + ": expected " +
                                             std::string(record_kind_name(*expected)) + ", found " +
                                             record_kind_name(ds.kind));
    } else if (rec.kind() != ds.kind) {
      throw error(errc::kind_mismatch,
                  path + ":" + std::to_string(line_no) + ": mixed record kinds");
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw error(errc::parse_error, path + ": zero records");
  // All records must agree on dimensions.
  for (std::size_t i = 1; i < ds.records.size(); ++i) {
    const auto& a = ds.records.front().payload;
    const auto& b = ds.records[i].payload;
    bool ok = true;
    if (const auto* pa = std::get_if<ClassProbsPayload>(&a))
      ok = pa->probs.num_classes() == std::get<ClassProbsPayload>(b).probs.num_classes();
    else if (const auto* ga = std::get_if<ProbGridPayload>(&a))
      ok = ga->grid.values().same_shape(std::get<ProbGridPayload>(b).grid.values());
    else if (const auto* qa = std::get_if<QuantileTriplePayload>(&a))
      ok = qa->triple.q50().same_shape(std::get<QuantileTriplePayload>(b).triple.q50());
    else if (const auto* sa = std::get_if<ExplicitSetsPayload>(&a))
      ok = sa->sets.size() == std::get<ExplicitSetsPayload>(b).sets.size();
    if (!ok)
      throw error(errc::dimension_mismatch,
                  path + ": record '" + ds.records[i].id + "' has mismatched dimensions");
  }
  return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw error(errc::invalid_argument, "cannot open " + path);
  for (const auto& rec : ds.records) out << record_to_json(rec).dump() << "\n";
}

// ---------------------------------------------------------------------------
// Run configuration shared by the CLI subcommands.
// ---------------------------------------------------------------------------

struct SplitFractions {
  double train = 0.64;
  double calibration = 0.16;
  double test = 0.20;

  void validate() const {
    if (std::fabs(train + calibration + test - 1.0) > 1e-9)
      throw error(errc::invalid_argument, "split fractions must sum to 1");
    if (train <= 0.0 || calibration <= 0.0 || test <= 0.0)
      throw error(errc::invalid_argument, "split fractions must be positive");
  }
};

// "min:max:step" grid specification.
inline LambdaGrid parse_grid_spec(const std::string& spec) {
  double mn, mx, step;
  char c1, c2;
  std::istringstream ss(spec);
  if (!(ss >> mn >> c1 >> mx >> c2 >> step) || c1 != ':' || c2 != ':')
    throw error(errc::parse_error, "grid spec must be min:max:step");
  return LambdaGrid::arithmetic(mn, mx, step);
}

// ---------------------------------------------------------------------------
// Result serialization.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CalibrationResult& r) {
  return {{"lambda_star", r.lambda_star},
          {"quantile_at_lambda_star", r.quantile_at_lambda_star},
          {"feasible", r.feasible},
          {"scanned", r.scanned}};
}

inline nlohmann::json to_json(const TrialReport& r) {
  return {{"alpha", r.alpha},
          {"delta", r.delta},
          {"exceedance_count", r.exceedance_count},
          {"trials", r.trials},
          {"infeasible_count", r.infeasible_count},
          {"degenerate_count", r.degenerate_count},
          {"exceedance_frequency", r.exceedance_frequency},
          {"mean_loss", r.mean_loss},
          {"efficiency", r.efficiency}};
}

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

// RFC-4180 CSV with one row per (alpha, delta) pair, suitable for bar plots.
inline void write_plot_csv(const std::string& path, const std::vector<TrialReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::invalid_argument, "cannot open " + path);
  out << "alpha,delta,exceedance_frequency,mean_loss,efficiency\r\n";
  for (const auto& r : reports) {
    out << detail::format_number(r.alpha) << "," << detail::format_number(r.delta) << ","
        << detail::format_number(r.exceedance_frequency) << ","
        << detail::format_number(r.mean_loss) << "," << detail::format_number(r.efficiency)
        << "\r\n";
  }
}

// Per-trial records, one row per trial, for loss-distribution plots.
inline void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::invalid_argument, "cannot open " + path);
  out << "trial,lambda_star,test_loss,efficiency,feasible\r\n";
  for (std::size_t t = 0; t < records.size(); ++t) {
    const auto& r = records[t];
    out << t << "," << detail::format_number(r.lambda_star) << ","
        << detail::format_number(r.test_loss) << "," << detail::format_number(r.efficiency)
        << "," << (r.feasible ? 1 : 0) << "\r\n";
  }
}

}  // namespace clcp
