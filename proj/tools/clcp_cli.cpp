// Command-line surface for calibration, prediction, evaluation, nesting
// checks, synthetic data generation, and guarantee simulations.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clcp/clcp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw clcp::error(clcp::errc::parse_error, "empty list");
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw clcp::error(clcp::errc::invalid_argument, "cannot open " + path);
  out << j.dump(2) << "\n";
}

clcp::ClassLossTable load_loss_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw clcp::error(clcp::errc::parse_error, "cannot open " + path);
  json j;
  in >> j;
  return clcp::ClassLossTable(j.get<std::vector<double>>());
}

clcp::LossMatrix load_loss_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw clcp::error(clcp::errc::parse_error, "cannot open " + path);
  json j;
  in >> j;
  auto rows = j.at("entries").get<std::vector<std::vector<double>>>();
  double bound = j.at("bound").get<double>();
  clcp::LambdaGrid grid(j.at("grid").get<std::vector<double>>());
  return clcp::LossMatrix(rows, bound, grid);
}

// Loss matrix from a score dataset: the predictor family follows the record
// kind, the loss is picked by name.
clcp::LossMatrix matrix_from_dataset(const clcp::Dataset& ds, const std::string& loss_name,
                                     const clcp::LambdaGrid& grid,
                                     const clcp::ClassLossTable* table) {
  using namespace clcp;
  const std::size_t n = ds.size();
  switch (ds.kind) {
    case RecordKind::class_probs: {
      if (loss_name == "class-varying" && table == nullptr)
        throw error(errc::invalid_argument, "class-varying loss needs --loss-table");
      if (loss_name != "miscoverage" && loss_name != "class-varying")
        throw error(errc::invalid_argument, "loss '" + loss_name + "' does not fit CLASS_PROBS");
      return compute_loss_matrix(
          n,
          [&](std::size_t i, double lambda) {
            const auto& p = std::get<ClassProbsPayload>(ds.records[i].payload);
            auto set = threshold_label_set(p.probs, lambda);
            return loss_name == "miscoverage" ? miscoverage_loss(p.label, set)
                                              : class_varying_loss(p.label, set, *table);
          },
          grid, kUnitBound);
    }
    case RecordKind::prob_grid: {
      if (loss_name != "fnr")
        throw error(errc::invalid_argument, "loss '" + loss_name + "' does not fit PROB_GRID");
      return compute_loss_matrix(
          n,
          [&](std::size_t i, double lambda) {
            const auto& p = std::get<ProbGridPayload>(ds.records[i].payload);
            return fnr_loss(p.truth, grid_segmentation_set(p.grid, lambda));
          },
          grid, kUnitBound);
    }
    case RecordKind::quantile_triple: {
      if (loss_name != "band-miscoverage")
        throw error(errc::invalid_argument,
                    "loss '" + loss_name + "' does not fit QUANTILE_TRIPLE");
      std::vector<BandScale> scales;
      scales.reserve(n);
      for (const auto& r : ds.records)
        scales.push_back(
            BandScale::from_triple(std::get<QuantileTriplePayload>(r.payload).triple));
      return compute_loss_matrix(
          n,
          [&](std::size_t i, double lambda) {
            const auto& p = std::get<QuantileTriplePayload>(ds.records[i].payload);
            return band_miscoverage_rate(p.truth,
                                         band_from_quantiles(p.triple, scales[i], lambda));
          },
          grid, kUnitBound);
    }
    case RecordKind::explicit_sets:
      throw error(errc::kind_mismatch, "EXPLICIT_SETS records are only for check-nesting");
  }
  throw error(errc::invalid_argument, "unhandled record kind");
}

int cmd_calibrate(const std::string& data_path, const std::string& matrix_path, double alpha,
                  double delta, const std::string& grid_spec, const std::string& loss_name,
                  const std::string& table_path, const std::string& out_path) {
  using namespace clcp;
  CalibrationResult result;
  json extra;
  if (!matrix_path.empty()) {
    auto matrix = load_loss_matrix(matrix_path);
    result = clcp_search(matrix, {alpha, delta});
    auto feas = check_feasibility(matrix, alpha);
    extra["feasibility_condition"] = feas.feasible;
    extra["feasibility_witness_lambda"] = feas.witness_lambda;
  } else {
    auto ds = load_dataset(data_path);
    auto grid = parse_grid_spec(grid_spec);
    std::optional<ClassLossTable> table;
    if (!table_path.empty()) table = load_loss_table(table_path);
    auto matrix = matrix_from_dataset(ds, loss_name, grid, table ? &*table : nullptr);
    result = clcp_search(matrix, {alpha, delta});
    auto feas = check_feasibility(matrix, alpha);
    extra["feasibility_condition"] = feas.feasible;
    extra["feasibility_witness_lambda"] = feas.witness_lambda;
  }
  json out = to_json(result);
  out["alpha"] = alpha;
  out["delta"] = delta;
  out.update(extra);
  write_json(out_path, out);
  return result.feasible ? 0 : 1;
}

int cmd_predict(const std::string& data_path, double lambda, const std::string& out_path) {
  using namespace clcp;
  auto ds = load_dataset(data_path);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw error(errc::invalid_argument, "cannot open " + out_path);
  for (const auto& rec : ds.records) {
    json j;
    j["id"] = rec.id;
    j["lambda"] = lambda;
    if (const auto* p = std::get_if<ClassProbsPayload>(&rec.payload)) {
      j["label_set"] = threshold_label_set(p->probs, lambda).members();
    } else if (const auto* g = std::get_if<ProbGridPayload>(&rec.payload)) {
      j["mask"] = detail::mask_to_json(grid_segmentation_set(g->grid, lambda));
    } else if (const auto* q = std::get_if<QuantileTriplePayload>(&rec.payload)) {
      auto band = band_from_quantiles(q->triple, BandScale::from_triple(q->triple), lambda);
      j["lower"] = detail::field_to_json(band.lower());
      j["upper"] = detail::field_to_json(band.upper());
    } else {
      throw error(errc::kind_mismatch, "EXPLICIT_SETS records are only for check-nesting");
    }
    out << j.dump() << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& data_path, double lambda, const std::string& loss_name,
                 const std::string& table_path, const std::string& out_path) {
  using namespace clcp;
  auto ds = load_dataset(data_path);
  std::optional<ClassLossTable> table;
  if (!table_path.empty()) table = load_loss_table(table_path);
  json records = json::array();
  double loss_sum = 0.0, eff_sum = 0.0;
  for (const auto& rec : ds.records) {
    double loss = 0.0, eff = 0.0;
    if (const auto* p = std::get_if<ClassProbsPayload>(&rec.payload)) {
      auto set = threshold_label_set(p->probs, lambda);
      if (loss_name == "class-varying") {
        if (!table) throw error(errc::invalid_argument, "class-varying loss needs --loss-table");
        loss = class_varying_loss(p->label, set, *table);
      } else {
        loss = miscoverage_loss(p->label, set);
      }
      eff = static_cast<double>(set.size());
    } else if (const auto* g = std::get_if<ProbGridPayload>(&rec.payload)) {
      auto mask = grid_segmentation_set(g->grid, lambda);
      loss = fnr_loss(g->truth, mask);
      eff = static_cast<double>(mask.count()) /
            static_cast<double>(g->grid.rows() * g->grid.cols());
    } else if (const auto* q = std::get_if<QuantileTriplePayload>(&rec.payload)) {
      auto scale = BandScale::from_triple(q->triple);
      auto band = band_from_quantiles(q->triple, scale, lambda);
      loss = band_miscoverage_rate(q->truth, band);
      double len = 0.0;
      for (std::size_t i = 0; i < scale.delta_plus.data.size(); ++i)
        len += lambda * (scale.delta_plus.data[i] + scale.delta_minus.data[i]);
      eff = len / static_cast<double>(scale.delta_plus.data.size());
    } else {
      throw error(errc::kind_mismatch, "EXPLICIT_SETS records are only for check-nesting");
    }
    records.push_back({{"id", rec.id}, {"loss", loss}, {"efficiency", eff}});
    loss_sum += loss;
    eff_sum += eff;
  }
  json out = {{"lambda", lambda},
              {"loss", loss_name},
              {"records", records},
              {"mean_loss", loss_sum / static_cast<double>(ds.size())},
              {"mean_efficiency", eff_sum / static_cast<double>(ds.size())}};
  write_json(out_path, out);
  return 0;
}

int cmd_check_nesting(const std::string& data_path, const std::string& grid_spec) {
  using namespace clcp;
  auto ds = load_dataset(data_path);
  auto grid = parse_grid_spec(grid_spec);
  json violations = json::array();
  for (const auto& rec : ds.records) {
    std::vector<NestingViolation> report;
    if (const auto* p = std::get_if<ClassProbsPayload>(&rec.payload)) {
      report = check_nesting<LabelSet>(
          [&](double l) { return threshold_label_set(p->probs, l); },
          [&](const LabelSet& s) { return miscoverage_loss(p->label, s); }, grid);
    } else if (const auto* g = std::get_if<ProbGridPayload>(&rec.payload)) {
      report = check_nesting<GridMask>(
          [&](double l) { return grid_segmentation_set(g->grid, l); },
          [&](const GridMask& m) { return fnr_loss(g->truth, m); }, grid);
    } else if (const auto* s = std::get_if<ExplicitSetsPayload>(&rec.payload)) {
      if (s->sets.size() != grid.size())
        throw error(errc::dimension_mismatch,
                    "record '" + rec.id + "': set count differs from grid size");
      report = check_nesting<LabelSet>(
          [&](double l) {
            auto j = static_cast<std::size_t>(
                std::lower_bound(grid.values().begin(), grid.values().end(), l) -
                grid.values().begin());
            return s->sets[j];
          },
          [&](const LabelSet& set) { return miscoverage_loss(s->label, set); }, grid);
    } else {
      throw error(errc::kind_mismatch, "QUANTILE_TRIPLE records have no subset relation");
    }
    for (const auto& v : report) {
      violations.push_back({{"id", rec.id},
                            {"grid_index", v.grid_index},
                            {"set_violation", v.set_violation},
                            {"loss_at", v.loss_at},
                            {"loss_next", v.loss_next}});
    }
  }
  json out = {{"violations", violations}, {"checked", ds.size()}};
  std::cout << out.dump(2) << "\n";
  return violations.empty() ? 0 : 1;
}

int cmd_gen_data(const std::string& task, std::uint64_t seed, std::size_t n_total,
                 std::size_t train_count, const std::string& out_path,
                 const std::string& table_out) {
  using namespace clcp;
  Dataset out_ds;
  if (task == "classification") {
    auto ds = gen_classification(seed, n_total, 3, 4, 2.0);
    auto rig = prepare_classification(ds, train_count);
    for (std::size_t i = 0; i < rig.p_true.size(); ++i) {
      ScoreRecord rec;
      rec.id = "c" + std::to_string(i);
      rec.payload = ClassProbsPayload{ClassProbs(rig.probs[i]), ds.labels[train_count + i]};
      out_ds.records.push_back(std::move(rec));
    }
    out_ds.kind = RecordKind::class_probs;
    if (!table_out.empty()) write_json(table_out, json(ds.class_losses));
  } else if (task == "segmentation") {
    auto ds = gen_grid_fields(seed, n_total, 16, 16, 2, 1.0);
    auto rig = prepare_segmentation(ds, train_count, LambdaGrid::arithmetic(0.0, 1.0, 0.01));
    for (std::size_t i = 0; i < rig.loss_rows.size(); ++i) {
      const std::size_t s = train_count + i;
      Field probs(ds.rows, ds.cols);
      probs.data = rig.probs[i];
      ScoreRecord rec;
      rec.id = "g" + std::to_string(i);
      rec.payload = ProbGridPayload{ProbGrid(std::move(probs)), ds.events[s]};
      out_ds.records.push_back(std::move(rec));
    }
    out_ds.kind = RecordKind::prob_grid;
  } else if (task == "band") {
    auto ds = gen_grid_fields(seed, n_total, 8, 8, 2, 1.0);
    auto rig = prepare_band(ds, train_count);
    for (std::size_t i = 0; i < rig.sorted_crit.size(); ++i) {
      const std::size_t s = train_count + i;
      Field q05(ds.rows, ds.cols), q50(ds.rows, ds.cols), q95(ds.rows, ds.cols);
      for (std::size_t p = 0; p < ds.rows; ++p) {
        for (std::size_t q = 0; q < ds.cols; ++q) {
          auto tr = rig.model.predict(cell_features(ds.inputs[s], p, q));
          q05.at(p, q) = tr.q05;
          q50.at(p, q) = tr.q50;
          q95.at(p, q) = tr.q95;
        }
      }
      ScoreRecord rec;
      rec.id = "b" + std::to_string(i);
      rec.payload = QuantileTriplePayload{
          QuantileTripleGrid(std::move(q05), std::move(q50), std::move(q95)), ds.labels[s]};
      out_ds.records.push_back(std::move(rec));
    }
    out_ds.kind = RecordKind::quantile_triple;
  } else {
    throw error(errc::invalid_argument, "unknown task '" + task + "'");
  }
  save_dataset(out_path, out_ds);
  return 0;
}

int cmd_simulate(const std::string& task, std::size_t trials, const std::string& alphas_csv,
                 const std::string& deltas_csv, std::uint64_t seed, const std::string& out_dir,
                 bool per_trial) {
  using namespace clcp;
  auto alphas = parse_list(alphas_csv);
  auto deltas = parse_list(deltas_csv);
  fs::create_directories(out_dir);
  std::vector<TrialReport> reports;

  auto emit = [&](const TrialReport& r, const std::vector<TrialRecord>& recs) {
    reports.push_back(r);
    char name[128];
    std::snprintf(name, sizeof(name), "report_a%g_d%g.json", r.alpha, r.delta);
    write_json((fs::path(out_dir) / name).string(), to_json(r));
    if (per_trial) {
      std::snprintf(name, sizeof(name), "trials_a%g_d%g.csv", r.alpha, r.delta);
      write_trials_csv((fs::path(out_dir) / name).string(), recs);
    }
  };

  if (task == "classification") {
    auto ds = gen_classification(seed, 2000, 3, 4, 2.0);
    auto rig = prepare_classification(ds, 500);
    auto grid = LambdaGrid::arithmetic(0.0, 1.0, 0.01);
    for (double a : alphas) {
      for (double d : deltas) {
        std::vector<TrialRecord> recs;
        emit(run_classification_trials(rig, grid, {a, d}, 200, trials, seed,
                                       per_trial ? &recs : nullptr),
             recs);
      }
    }
  } else if (task == "segmentation") {
    auto ds = gen_grid_fields(seed, 800, 16, 16, 2, 1.0);
    auto rig = prepare_segmentation(ds, 100, LambdaGrid::arithmetic(0.0, 1.0, 0.01));
    for (double a : alphas) {
      for (double d : deltas) {
        std::vector<TrialRecord> recs;
        emit(run_segmentation_trials(rig, {a, d}, 150, trials, seed, per_trial ? &recs : nullptr),
             recs);
      }
    }
  } else if (task == "band") {
    auto ds = gen_grid_fields(seed, 800, 8, 8, 2, 1.0);
    auto rig = prepare_band(ds, 100);
    const std::vector<double> ladder = {100.0, 10.0, 1.0, 0.1, 0.01};
    for (double a : alphas) {
      for (double d : deltas) {
        std::vector<TrialRecord> recs;
        emit(run_band_trials(rig, {a, d}, ladder, 100, 150, trials, seed,
                             per_trial ? &recs : nullptr),
             recs);
      }
    }
  } else {
    throw error(errc::invalid_argument, "unknown task '" + task + "'");
  }
  write_plot_csv((fs::path(out_dir) / "summary.csv").string(), reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal loss-controlling prediction toolkit"};
  app.require_subcommand(1);

  // calibrate
  std::string data_path, matrix_path, grid_spec = "0:1:0.01", loss_name = "miscoverage";
  std::string table_path, out_path = "result.json";
  double alpha = 0.1, delta = 0.1, lambda = 0.0;
  auto* cal = app.add_subcommand("calibrate", "Search for lambda* on calibration scores");
  cal->add_option("--data", data_path, "JSON-lines score dataset");
  cal->add_option("--matrix", matrix_path, "precomputed loss matrix JSON");
  cal->add_option("--alpha", alpha, "target loss level")->required();
  cal->add_option("--delta", delta, "risk level")->required();
  cal->add_option("--grid", grid_spec, "lambda grid min:max:step");
  cal->add_option("--loss", loss_name, "miscoverage|class-varying|fnr|band-miscoverage");
  cal->add_option("--loss-table", table_path, "per-class penalties JSON array");
  cal->add_option("--out", out_path, "output JSON path");

  // predict
  std::string p_data, p_out = "predictions.jsonl";
  auto* pred = app.add_subcommand("predict", "Emit prediction sets at a fixed lambda");
  pred->add_option("--data", p_data, "JSON-lines score dataset")->required();
  pred->add_option("--lambda", lambda, "nesting parameter")->required();
  pred->add_option("--out", p_out, "output JSON-lines path");

  // evaluate
  std::string e_data, e_loss = "miscoverage", e_table, e_out = "evaluation.json";
  double e_lambda = 0.0;
  auto* ev = app.add_subcommand("evaluate", "Per-record losses and efficiency at a lambda");
  ev->add_option("--data", e_data, "JSON-lines score dataset")->required();
  ev->add_option("--lambda", e_lambda, "nesting parameter")->required();
  ev->add_option("--loss", e_loss, "loss name");
  ev->add_option("--loss-table", e_table, "per-class penalties JSON array");
  ev->add_option("--out", e_out, "output JSON path");

  // check-nesting
  std::string n_data, n_grid = "0:1:0.1";
  auto* chk = app.add_subcommand("check-nesting", "Verify set and loss nesting over a grid");
  chk->add_option("--data", n_data, "JSON-lines score dataset")->required();
  chk->add_option("--grid", n_grid, "lambda grid min:max:step");

  // gen-data
  std::string g_task = "classification", g_out = "dataset.jsonl", g_table_out;
  std::uint64_t g_seed = 1;
  std::size_t g_n = 1000, g_train = 200;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic score dataset");
  gen->add_option("--task", g_task, "classification|segmentation|band");
  gen->add_option("--seed", g_seed, "root seed");
  gen->add_option("--n", g_n, "total samples drawn (before the train split)");
  gen->add_option("--train", g_train, "samples used to fit the underlying model");
  gen->add_option("--out", g_out, "output JSON-lines path");
  gen->add_option("--loss-table-out", g_table_out, "also write the class penalties here");

  // simulate
  std::string s_task = "classification", s_alphas = "0.1", s_deltas = "0.1", s_out = "sim-out";
  std::uint64_t s_seed = 1;
  std::size_t s_trials = 1000;
  bool s_per_trial = false;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo verification of the guarantee");
  sim->add_option("--task", s_task, "classification|segmentation|band");
  sim->add_option("--trials", s_trials, "Monte Carlo trials per (alpha, delta) pair");
  sim->add_option("--alphas", s_alphas, "comma-separated loss levels");
  sim->add_option("--deltas", s_deltas, "comma-separated risk levels");
  sim->add_option("--seed", s_seed, "root seed");
  sim->add_option("--out-dir", s_out, "output directory");
  sim->add_flag("--per-trial", s_per_trial, "also write per-trial CSV records");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cal->parsed()) {
      if (data_path.empty() == matrix_path.empty())
        throw clcp::error(clcp::errc::invalid_argument,
                          "calibrate needs exactly one of --data or --matrix");
      return cmd_calibrate(data_path, matrix_path, alpha, delta, grid_spec, loss_name,
                           table_path, out_path);
    }
    if (pred->parsed()) return cmd_predict(p_data, lambda, p_out);
    if (ev->parsed()) return cmd_evaluate(e_data, e_lambda, e_loss, e_table, e_out);
    if (chk->parsed()) return cmd_check_nesting(n_data, n_grid);
    if (gen->parsed()) return cmd_gen_data(g_task, g_seed, g_n, g_train, g_out, g_table_out);
    if (sim->parsed())
      return cmd_simulate(s_task, s_trials, s_alphas, s_deltas, s_seed, s_out, s_per_trial);
  } catch (const clcp::error& e) {
    json err = {{"error", clcp::errc_name(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err = {{"error", "INTERNAL"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 2;
}
