#ifndef POWERMAT_EXPERIMENT_HPP
#define POWERMAT_EXPERIMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "powermat/dataset.hpp"
#include "powermat/errors.hpp"
#include "powermat/metrics.hpp"
#include "powermat/toml_lite.hpp"
#include "powermat/trainer.hpp"

namespace powermat {

// Per-algorithm deviations from the shared [train]/[model] settings.
struct AlgoOverride {
  std::optional<double> gamma, sigma_u, sigma_v, init_scale;
  std::optional<int> epochs;
  std::optional<bool> rating_blind;
  std::optional<std::string> gradient_mode, prediction_rule;
};

struct ExperimentConfig {
  // [data]
  std::string source = "synthetic";  // "synthetic" or "csv"
  std::string path;                  // csv source file
  ColumnMapping mapping;             // column names, rating bounds, scheme
  std::size_t n_users = 50, n_items = 100, n_events = 5000;
  double zipf_exponent = 1.0;
  std::vector<int> context_categories = {3, 3, 3};
  std::uint64_t synth_seed = 101;
  double split_fraction = 0.2;
  std::uint64_t split_seed = 13;

  // [train] + [model] + [train.<algorithm>]
  std::vector<Algorithm> algorithms = {Algorithm::powermat, Algorithm::dotmat,
                                       Algorithm::classic_mf};
  TrainConfig base;
  std::map<std::string, AlgoOverride> overrides;

  // [sweep]
  std::vector<double> sweep_gammas;  // empty -> default grid

  // [output]
  std::string out_dir = "out";
  bool record_timing = false;  // timings break byte-level determinism, so opt-in
  int k_rec = 10;
  std::string context_source = "per_user_last";

  void validate() const {
    if (source != "synthetic" && source != "csv")
      throw config_error("data.source must be 'synthetic' or 'csv', not '" + source + "'");
    if (source == "csv" && path.empty()) throw config_error("data.path is required for csv");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
      throw config_error("data.split_fraction must be in (0, 1)");
    if (algorithms.empty()) throw config_error("train.algorithms must select at least one");
    for (std::size_t i = 0; i < sweep_gammas.size(); ++i) {
      if (!(sweep_gammas[i] > 0.0))
        throw config_error("sweep.gammas must be strictly positive");
      if (i > 0 && !(sweep_gammas[i] > sweep_gammas[i - 1]))
        throw config_error("sweep.gammas must be strictly increasing");
    }
    if (k_rec < 1) throw config_error("output.k_rec must be >= 1");
    context_source_from_string(context_source);
    for (const auto& a : algorithms) config_for(a).validate();
  }

  TrainConfig config_for(Algorithm algorithm) const {
    TrainConfig cfg = base;
    cfg.algorithm = algorithm;
    if (algorithm != Algorithm::powermat) cfg.rating_blind = false;
    if (const auto it = overrides.find(to_string(algorithm)); it != overrides.end()) {
      const AlgoOverride& o = it->second;
      if (o.gamma) cfg.hyper.gamma = *o.gamma;
      if (o.sigma_u) cfg.hyper.sigma_u = *o.sigma_u;
      if (o.sigma_v) cfg.hyper.sigma_v = *o.sigma_v;
      if (o.init_scale) cfg.init_scale = *o.init_scale;
      if (o.epochs) cfg.epochs = *o.epochs;
      if (o.rating_blind) cfg.rating_blind = *o.rating_blind;
      if (o.gradient_mode) cfg.hyper.gradient_mode = gradient_mode_from_string(*o.gradient_mode);
      if (o.prediction_rule)
        cfg.hyper.prediction_rule = prediction_rule_from_string(*o.prediction_rule);
    }
    return cfg;
  }

  TopKConfig topk() const {
    TopKConfig cfg;
    cfg.k_rec = k_rec;
    cfg.context_source = context_source_from_string(context_source);
    return cfg;
  }
};

// The Fig. 1/2 x-axis: 8 log-spaced learning rates from 1e-4 to 3e-1.
inline std::vector<double> default_sweep_grid() {
  const double lo = 1e-4, hi = 3e-1;
  std::vector<double> grid(8);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) *
                                          static_cast<double>(i) / 7.0);
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

namespace detail {

inline AlgoOverride read_override(const toml_lite::Document& doc, const std::string& section) {
  AlgoOverride o;
  if (doc.has(section + ".gamma")) o.gamma = doc.get_double(section + ".gamma");
  if (doc.has(section + ".sigma_u")) o.sigma_u = doc.get_double(section + ".sigma_u");
  if (doc.has(section + ".sigma_v")) o.sigma_v = doc.get_double(section + ".sigma_v");
  if (doc.has(section + ".init_scale")) o.init_scale = doc.get_double(section + ".init_scale");
  if (doc.has(section + ".epochs"))
    o.epochs = static_cast<int>(doc.get_int(section + ".epochs"));
  if (doc.has(section + ".rating_blind")) o.rating_blind = doc.get_bool_or(section + ".rating_blind", false);
  if (doc.has(section + ".gradient_mode")) o.gradient_mode = doc.get_string(section + ".gradient_mode");
  if (doc.has(section + ".prediction_rule"))
    o.prediction_rule = doc.get_string(section + ".prediction_rule");
  return o;
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_document(const toml_lite::Document& doc) {
  ExperimentConfig c;

  c.source = doc.get_string_or("data.source", c.source);
  c.path = doc.get_string_or("data.path", c.path);
  c.mapping.user_col = doc.get_string_or("data.user_col", c.mapping.user_col);
  c.mapping.item_col = doc.get_string_or("data.item_col", c.mapping.item_col);
  c.mapping.rating_col = doc.get_string_or("data.rating_col", c.mapping.rating_col);
  if (doc.has("data.context_cols"))
    c.mapping.context_cols = doc.get_string_array("data.context_cols");
  c.mapping.rating_min = doc.get_double_or("data.rating_min", c.mapping.rating_min);
  c.mapping.r_max = doc.get_double_or("data.r_max", c.mapping.r_max);
  c.mapping.scheme =
      context_scheme_from_string(doc.get_string_or("data.scheme", to_string(c.mapping.scheme)));
  c.n_users = static_cast<std::size_t>(doc.get_int_or("data.n_users", static_cast<std::int64_t>(c.n_users)));
  c.n_items = static_cast<std::size_t>(doc.get_int_or("data.n_items", static_cast<std::int64_t>(c.n_items)));
  c.n_events = static_cast<std::size_t>(doc.get_int_or("data.n_events", static_cast<std::int64_t>(c.n_events)));
  c.zipf_exponent = doc.get_double_or("data.zipf_exponent", c.zipf_exponent);
  if (doc.has("data.context_categories")) {
    c.context_categories.clear();
    for (const auto v : doc.get_int_array("data.context_categories"))
      c.context_categories.push_back(static_cast<int>(v));
  }
  c.synth_seed = static_cast<std::uint64_t>(doc.get_int_or("data.synth_seed", static_cast<std::int64_t>(c.synth_seed)));
  c.split_fraction = doc.get_double_or("data.split_fraction", c.split_fraction);
  c.split_seed = static_cast<std::uint64_t>(doc.get_int_or("data.split_seed", static_cast<std::int64_t>(c.split_seed)));

  c.base.hyper.k = static_cast<int>(doc.get_int_or("model.k", c.base.hyper.k));
  c.base.hyper.sigma_u = doc.get_double_or("model.sigma_u", c.base.hyper.sigma_u);
  c.base.hyper.sigma_v = doc.get_double_or("model.sigma_v", c.base.hyper.sigma_v);
  c.base.hyper.dot_floor = doc.get_double_or("model.dot_floor", c.base.hyper.dot_floor);
  c.base.hyper.exponent_cap = doc.get_double_or("model.exponent_cap", c.base.hyper.exponent_cap);
  c.base.hyper.prediction_rule = prediction_rule_from_string(
      doc.get_string_or("model.prediction_rule", to_string(c.base.hyper.prediction_rule)));
  c.base.hyper.gradient_mode = gradient_mode_from_string(
      doc.get_string_or("model.gradient_mode", to_string(c.base.hyper.gradient_mode)));
  c.base.hyper.r_max = c.mapping.r_max;  // one rating scale for data and model

  if (doc.has("train.algorithms")) {
    c.algorithms.clear();
    for (const auto& name : doc.get_string_array("train.algorithms"))
      c.algorithms.push_back(algorithm_from_string(name));
  }
  c.base.epochs = static_cast<int>(doc.get_int_or("train.epochs", c.base.epochs));
  c.base.hyper.gamma = doc.get_double_or("train.gamma", c.base.hyper.gamma);
  c.base.init_scale = doc.get_double_or("train.init_scale", c.base.init_scale);
  c.base.init_seed = static_cast<std::uint64_t>(doc.get_int_or("train.init_seed", static_cast<std::int64_t>(c.base.init_seed)));
  c.base.shuffle_seed = static_cast<std::uint64_t>(doc.get_int_or("train.shuffle_seed", static_cast<std::int64_t>(c.base.shuffle_seed)));
  c.base.rating_blind = doc.get_bool_or("train.rating_blind", c.base.rating_blind);

  for (const char* name : {"powermat", "dotmat", "classic_mf"}) {
    const auto o = detail::read_override(doc, std::string("train.") + name);
    c.overrides[name] = o;
  }

  if (doc.has("sweep.gammas")) c.sweep_gammas = doc.get_double_array("sweep.gammas");

  c.out_dir = doc.get_string_or("output.dir", c.out_dir);
  c.record_timing = doc.get_bool_or("output.record_timing", c.record_timing);
  c.k_rec = static_cast<int>(doc.get_int_or("output.k_rec", c.k_rec));
  c.context_source = doc.get_string_or("output.context_source", c.context_source);

  const auto unread = doc.unread_keys();
  if (!unread.empty()) {
    std::string joined;
    for (const auto& k : unread) joined += (joined.empty() ? "" : ", ") + k;
    throw config_error("unknown config keys: " + joined);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_document(toml_lite::parse_file(path));
}

inline Dataset load_dataset(const ExperimentConfig& c) {
  if (c.source == "csv") return parse_comoda(c.path, c.mapping).dataset;
  return synth_generate(c.n_users, c.n_items, c.n_events, c.zipf_exponent,
                        c.context_categories, c.synth_seed, c.mapping.rating_min,
                        c.mapping.r_max, c.mapping.scheme);
}

struct AlgoRun {
  std::string algorithm;
  bool diverged = false;
  std::string error;
  EvalReport eval;
  TrainReport report;
  FactorModel model;
};

struct SingleResult {
  std::vector<AlgoRun> runs;
  Dataset train_set, test_set;
};

// Loads and splits once, then trains and evaluates each selected algorithm
// on the identical split. A diverged run is recorded and the rest proceed.
inline SingleResult run_single(const ExperimentConfig& c) {
  c.validate();
  SingleResult out;
  const Dataset data = load_dataset(c);
  std::tie(out.train_set, out.test_set) = split(data, c.split_fraction, c.split_seed);

  for (const auto algorithm : c.algorithms) {
    AlgoRun run;
    run.algorithm = to_string(algorithm);
    try {
      auto [model, report] = train(out.train_set, c.config_for(algorithm));
      run.eval = evaluate(run.algorithm, model, out.train_set, out.test_set, c.topk());
      run.model = std::move(model);
      run.report = std::move(report);
    } catch (const numeric_error& e) {
      run.diverged = true;
      run.error = e.what();
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

struct SweepRow {
  std::string algorithm;
  double gamma = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double matthew_degree = 0.0;
  bool diverged = false;
  double train_seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<double> grid;
};

// One independent training run per (algorithm, gamma) cell on a shared
// split. Cells never share mutable state; a diverged cell becomes a row
// with diverged = 1 and empty metrics.
inline SweepResult run_sweep(const ExperimentConfig& c) {
  c.validate();
  SweepResult out;
  out.grid = c.sweep_gammas.empty() ? default_sweep_grid() : c.sweep_gammas;

  const Dataset data = load_dataset(c);
  const auto [train_set, test_set] = split(data, c.split_fraction, c.split_seed);

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto algorithm : c.algorithms) {
    for (const double gamma : out.grid) {
      TrainConfig cell = c.config_for(algorithm);
      cell.hyper.gamma = gamma;
      SweepRow row;
      row.algorithm = to_string(algorithm);
      row.gamma = gamma;
      try {
        const auto [model, report] = train(train_set, cell);
        const auto eval = evaluate(row.algorithm, model, train_set, test_set, c.topk());
        row.mae = eval.mae;
        row.rmse = eval.rmse;
        row.matthew_degree = eval.matthew_degree;
        row.train_seconds = report.wall_seconds;
      } catch (const numeric_error&) {
        row.diverged = true;
        row.mae = row.rmse = row.matthew_degree = nan;
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

namespace detail {

// Fixed-format numeric field: shortest %.10g form, any non-finite value
// rendered as plain "nan" so rows are stable across platforms.
inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_seconds(double v, bool record_timing) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", record_timing ? v : 0.0);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

inline void write_sweep_csv(const SweepResult& result, const std::string& path,
                            bool record_timing) {
  auto out = detail::open_out(path);
  out << "algorithm,gamma,mae,rmse,matthew_degree,diverged,train_seconds\n";
  for (const auto& row : result.rows)
    out << row.algorithm << ',' << detail::csv_number(row.gamma) << ','
        << detail::csv_number(row.mae) << ',' << detail::csv_number(row.rmse) << ','
        << detail::csv_number(row.matthew_degree) << ',' << (row.diverged ? 1 : 0) << ','
        << detail::csv_seconds(row.train_seconds, record_timing) << "\n";
}

// Best finite MAE per algorithm; ties resolve to the smaller gamma because
// rows are emitted in ascending grid order.
inline nlohmann::json sweep_summary(const SweepResult& result) {
  nlohmann::json algorithms(nlohmann::json::value_t::object);
  for (const auto& row : result.rows) {
    auto& entry = algorithms[row.algorithm];
    if (entry.is_null())
      entry = {{"best_gamma", nullptr}, {"best_mae", nullptr}, {"diverged_cells", 0}, {"cells", 0}};
    entry["cells"] = entry["cells"].get<int>() + 1;
    if (row.diverged) {
      entry["diverged_cells"] = entry["diverged_cells"].get<int>() + 1;
      continue;
    }
    if (!std::isfinite(row.mae)) continue;
    if (entry["best_mae"].is_null() || row.mae < entry["best_mae"].get<double>()) {
      entry["best_mae"] = row.mae;
      entry["best_gamma"] = row.gamma;
    }
  }
  return {{"grid", result.grid}, {"rows", result.rows.size()}, {"algorithms", algorithms}};
}

inline void write_sweep_summary(const SweepResult& result, const std::string& path) {
  auto out = detail::open_out(path);
  out << sweep_summary(result).dump(2) << "\n";
}

inline void write_single_csv(const SingleResult& result, const std::string& path) {
  auto out = detail::open_out(path);
  out << "algorithm,gamma,mae,rmse,matthew_degree,n_test,clip_count,diverged\n";
  for (const auto& run : result.runs) {
    if (run.diverged) {
      out << run.algorithm << ",nan,nan,nan,nan,0,0,1\n";
      continue;
    }
    out << run.algorithm << ',' << detail::csv_number(run.eval.gamma) << ','
        << detail::csv_number(run.eval.mae) << ',' << detail::csv_number(run.eval.rmse) << ','
        << detail::csv_number(run.eval.matthew_degree) << ',' << run.eval.n_test << ','
        << run.eval.clip_count << ",0\n";
  }
}

inline void write_single_summary(const SingleResult& result, const std::string& path,
                                 bool record_timing) {
  nlohmann::json algorithms(nlohmann::json::value_t::object);
  for (const auto& run : result.runs) {
    nlohmann::json entry;
    entry["diverged"] = run.diverged;
    if (run.diverged) {
      entry["error"] = run.error;
    } else {
      entry["gamma"] = run.eval.gamma;
      entry["prediction_rule"] = to_string(run.eval.prediction_rule);
      entry["mae"] = run.eval.mae;
      entry["rmse"] = run.eval.rmse;
      entry["matthew_degree"] =
          std::isfinite(run.eval.matthew_degree)
              ? nlohmann::json(run.eval.matthew_degree)
              : nlohmann::json(nullptr);
      entry["n_test"] = run.eval.n_test;
      entry["clip_count"] = run.eval.clip_count;
      entry["final_loss"] = run.report.loss_trace.back();
      entry["steps"] = run.report.step_count;
      entry["rating_reads"] = run.report.rating_reads;
      entry["train_seconds"] = record_timing ? run.report.wall_seconds : 0.0;
    }
    algorithms[run.algorithm] = std::move(entry);
  }
  nlohmann::json j = {{"n_train", result.train_set.n_events()},
                      {"n_test", result.test_set.n_events()},
                      {"algorithms", algorithms}};
  auto out = detail::open_out(path);
  out << j.dump(2) << "\n";
}

// CSV emitter for synthetic corpora, shaped like the input format:
// userID,itemID,rating, then one column per context variable.
inline void write_dataset_csv(const Dataset& data, const std::string& path) {
  auto out = detail::open_out(path);
  out << "userID,itemID,rating";
  for (const auto& name : data.encoder.column_names) out << ',' << name;
  out << "\n";
  for (const auto& ev : data.events) {
    out << ev.user_id << ',' << ev.item_id << ',' << detail::csv_number(ev.rating);
    for (const int code : ev.context_attrs) out << ',' << code;
    out << "\n";
  }
}

}  // namespace powermat

#endif
