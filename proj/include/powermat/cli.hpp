#ifndef POWERMAT_CLI_HPP
#define POWERMAT_CLI_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "powermat/dataset.hpp"
#include "powermat/experiment.hpp"
#include "powermat/model_io.hpp"
#include "powermat/trainer.hpp"

namespace powermat {

namespace detail {

// --seed N pins the whole pipeline: split, init, and shuffle streams
// stay distinct but all derive from the one value.
inline void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.split_seed = seed;
  config.base.init_seed = seed + 1;
  config.base.shuffle_seed = seed + 2;
}

inline ExperimentConfig load_cli_config(const std::string& config_path,
                                        const std::string& out_dir, bool has_seed,
                                        std::uint64_t seed) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (has_seed) apply_seed(config, seed);
  return config;
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::vector<int> parse_code_list(const std::string& text) {
  std::vector<int> codes;
  for (const auto& field : split_csv_line(text)) {
    int code = 0;
    if (!parse_int(trim(field), code))
      throw config_error("bad integer in code list '" + text + "'");
    codes.push_back(code);
  }
  return codes;
}

inline int run_train_command(const std::string& config_path, const std::string& out_dir,
                             bool has_seed, std::uint64_t seed) {
  const auto config = load_cli_config(config_path, out_dir, has_seed, seed);
  const auto result = run_single(config);

  write_single_csv(result, join_path(config.out_dir, "report.csv"));
  write_single_summary(result, join_path(config.out_dir, "summary.json"),
                       config.record_timing);
  std::size_t diverged = 0;
  for (const auto& run : result.runs) {
    if (run.diverged) {
      ++diverged;
      std::cout << run.algorithm << ": diverged (" << run.error << ")\n";
      continue;
    }
    save_model(run.model, result.train_set,
               join_path(config.out_dir, "model_" + run.algorithm + ".json"));
    std::cout << run.algorithm << ": mae=" << detail::csv_number(run.eval.mae)
              << " rmse=" << detail::csv_number(run.eval.rmse)
              << " matthew_degree=" << detail::csv_number(run.eval.matthew_degree)
              << " n_test=" << run.eval.n_test << "\n";
  }
  std::cout << "wrote " << join_path(config.out_dir, "report.csv") << "\n";
  if (diverged == result.runs.size()) {
    std::cerr << "error: every algorithm diverged\n";
    return 3;
  }
  return 0;
}

inline int run_sweep_command(const std::string& config_path, const std::string& out_dir,
                             bool has_seed, std::uint64_t seed) {
  const auto config = load_cli_config(config_path, out_dir, has_seed, seed);
  const auto result = run_sweep(config);

  const auto csv_path = join_path(config.out_dir, "sweep.csv");
  write_sweep_csv(result, csv_path, config.record_timing);
  write_sweep_summary(result, join_path(config.out_dir, "sweep_summary.json"));

  const auto summary = sweep_summary(result);
  std::size_t usable = 0;
  for (const auto& [name, entry] : summary.at("algorithms").items()) {
    if (entry.at("best_mae").is_null()) {
      std::cout << name << ": every grid cell diverged\n";
      continue;
    }
    ++usable;
    std::cout << name << ": best gamma=" << detail::csv_number(entry.at("best_gamma"))
              << " mae=" << detail::csv_number(entry.at("best_mae")) << "\n";
  }
  std::cout << "wrote " << csv_path << " (" << result.rows.size() << " rows)\n";
  if (usable == 0) {
    std::cerr << "error: every sweep cell diverged\n";
    return 3;
  }
  return 0;
}

inline int run_predict_command(const std::string& model_path, const std::string& user_id,
                               const std::string& item_id, const std::string& context_text) {
  const auto loaded = load_model(model_path);
  const auto& model = loaded.model;
  const auto& view = loaded.index_view;

  ContextVector context;
  if (!context_text.empty()) {
    RatingEvent probe;
    probe.context_attrs = parse_code_list(context_text);
    if (probe.context_attrs.size() != view.encoder.column_names.size())
      throw config_error("--context needs " +
                         std::to_string(view.encoder.column_names.size()) +
                         " codes, got " + std::to_string(probe.context_attrs.size()));
    context = view.encoder.encode(probe);
  } else if (model.hyper.prediction_rule == PredictionRule::power) {
    throw config_error("--context is required for a power-rule model");
  }

  const double raw = predict(model, user_id, item_id, context, view);
  const double clipped = std::clamp(raw, view.rating_min, view.r_max);
  std::cout << "prediction=" << detail::csv_number(raw)
            << " clipped=" << detail::csv_number(clipped) << "\n";
  return 0;
}

inline int run_synth_command(const std::string& out_path, std::size_t n_users,
                             std::size_t n_items, std::size_t n_events, double zipf_exponent,
                             const std::string& cats_text, std::uint64_t seed,
                             double rating_min, double r_max) {
  const auto cats = cats_text.empty() ? std::vector<int>{3, 3, 3} : parse_code_list(cats_text);
  const auto data =
      synth_generate(n_users, n_items, n_events, zipf_exponent, cats, seed, rating_min, r_max);
  write_dataset_csv(data, out_path);
  std::cout << "wrote " << out_path << " (" << data.n_events() << " events, "
            << data.n_users() << " users, " << data.n_items() << " items)\n";
  return 0;
}

inline int run_validate_command(const std::string& input, ColumnMapping mapping,
                                const std::string& context_cols_text) {
  if (!context_cols_text.empty()) {
    mapping.context_cols.clear();
    for (const auto& field : split_csv_line(context_cols_text))
      mapping.context_cols.push_back(trim(field));
  }
  const auto parsed = parse_comoda(input, mapping);
  std::cout << "rows_total=" << parsed.rows_total << " rows_kept=" << parsed.rows_kept
            << " rows_skipped=" << parsed.rows_skipped << "\n";
  std::cout << "users=" << parsed.dataset.n_users() << " items=" << parsed.dataset.n_items()
            << " context_dim=" << parsed.dataset.encoder.dim << "\n";
  const std::size_t shown = std::min<std::size_t>(parsed.diagnostics.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) std::cout << "skipped " << parsed.diagnostics[i] << "\n";
  if (shown < parsed.diagnostics.size())
    std::cout << "... " << (parsed.diagnostics.size() - shown) << " more\n";
  return 0;
}

}  // namespace detail

inline int cli_main(int argc, char** argv) {
  CLI::App app{"Context-aware recommender built on rating-free matrix factorization"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;

  auto* train_cmd = app.add_subcommand("train", "Train the configured algorithms once");
  train_cmd->add_option("--config", config_path, "Experiment config (TOML)")->required();
  auto* train_seed = train_cmd->add_option("--seed", seed, "Master seed for split/init/shuffle");
  train_cmd->add_option("--out", out_dir, "Output directory override");

  auto* sweep_cmd = app.add_subcommand("sweep", "Learning-rate sweep over the gamma grid");
  sweep_cmd->add_option("--config", config_path, "Experiment config (TOML)")->required();
  auto* sweep_seed = sweep_cmd->add_option("--seed", seed, "Master seed for split/init/shuffle");
  sweep_cmd->add_option("--out", out_dir, "Output directory override");

  std::string model_path, user_id, item_id, context_text;
  auto* predict_cmd = app.add_subcommand("predict", "Score one user/item pair with a saved model");
  predict_cmd->add_option("--model", model_path, "Model snapshot (JSON)")->required();
  predict_cmd->add_option("--user", user_id, "User id")->required();
  predict_cmd->add_option("--item", item_id, "Item id")->required();
  predict_cmd->add_option("--context", context_text, "Comma-separated raw context codes");

  std::string synth_out, cats_text;
  std::size_t n_users = 50, n_items = 100, n_events = 5000;
  double zipf_exponent = 1.0, rating_min = 1.0, r_max = 5.0;
  std::uint64_t synth_seed = 101;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic interaction CSV");
  synth_cmd->add_option("--out", synth_out, "Output CSV path")->required();
  synth_cmd->add_option("--users", n_users, "User count");
  synth_cmd->add_option("--items", n_items, "Item count");
  synth_cmd->add_option("--events", n_events, "Event count");
  synth_cmd->add_option("--zipf", zipf_exponent, "Item popularity exponent");
  synth_cmd->add_option("--context-cats", cats_text, "Comma-separated category counts");
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  synth_cmd->add_option("--rating-min", rating_min, "Smallest rating value");
  synth_cmd->add_option("--r-max", r_max, "Largest rating value");

  std::string input_path, context_cols_text;
  ColumnMapping mapping;
  auto* validate_cmd = app.add_subcommand("validate-data", "Parse a CSV and report bad rows");
  validate_cmd->add_option("--input", input_path, "Input CSV path")->required();
  validate_cmd->add_option("--user-col", mapping.user_col, "User id column");
  validate_cmd->add_option("--item-col", mapping.item_col, "Item id column");
  validate_cmd->add_option("--rating-col", mapping.rating_col, "Rating column");
  validate_cmd->add_option("--context-cols", context_cols_text, "Comma-separated context columns");
  validate_cmd->add_option("--rating-min", mapping.rating_min, "Smallest valid rating");
  validate_cmd->add_option("--r-max", mapping.r_max, "Largest valid rating");

  try {
    app.parse(argc, argv);
    if (*train_cmd)
      return detail::run_train_command(config_path, out_dir, !train_seed->empty(), seed);
    if (*sweep_cmd)
      return detail::run_sweep_command(config_path, out_dir, !sweep_seed->empty(), seed);
    if (*predict_cmd)
      return detail::run_predict_command(model_path, user_id, item_id, context_text);
    if (*synth_cmd)
      return detail::run_synth_command(synth_out, n_users, n_items, n_events, zipf_exponent,
                                       cats_text, synth_seed, rating_min, r_max);
    if (*validate_cmd)
      return detail::run_validate_command(input_path, mapping, context_cols_text);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const encoding_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// Test-friendly entry point: args exclude the program name.
inline int cli_main(std::vector<std::string> args) {
  std::string program = "powermat";
  std::vector<char*> argv;
  argv.push_back(program.data());
  for (auto& arg : args) argv.push_back(arg.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace powermat

#endif
