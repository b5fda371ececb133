#ifndef POWERMAT_METRICS_HPP
#define POWERMAT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "powermat/errors.hpp"
#include "powermat/trainer.hpp"

namespace powermat {

inline double mae(const std::vector<double>& predictions, const std::vector<double>& truths) {
  if (predictions.size() != truths.size())
    throw dimension_error("mae: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(truths.size()) + " truths");
  if (predictions.empty()) throw validation_error("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    s += std::abs(predictions[i] - truths[i]);
  return s / static_cast<double>(predictions.size());
}

inline double rmse(const std::vector<double>& predictions, const std::vector<double>& truths) {
  if (predictions.size() != truths.size())
    throw dimension_error("rmse: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(truths.size()) + " truths");
  if (predictions.empty()) throw validation_error("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

// Clips every prediction into [lo, hi] in place; returns how many moved.
inline std::size_t clip_predictions(std::vector<double>& predictions, double lo, double hi) {
  std::size_t clipped = 0;
  for (double& p : predictions) {
    const double c = std::min(std::max(p, lo), hi);
    if (c != p) {
      p = c;
      ++clipped;
    }
  }
  return clipped;
}

// Least-squares slope of ln(count) against ln(rank), counts sorted
// descending, zeros dropped, ranks from 1. Scale-invariant by construction.
inline double zipf_slope(std::vector<double> counts) {
  std::sort(counts.begin(), counts.end(), std::greater<double>());
  while (!counts.empty() && counts.back() <= 0.0) counts.pop_back();
  if (counts.size() < 2)
    throw fit_error("zipf_slope: need at least 2 positive counts, have " +
                    std::to_string(counts.size()));
  const auto n = static_cast<double>(counts.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    const double x = std::log(static_cast<double>(r + 1));
    const double y = std::log(counts[r]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = sxx - sx * sx / n;
  if (denom <= 0.0) throw fit_error("zipf_slope: degenerate rank spread");
  return (sxy - sx * sy / n) / denom;
}

enum class ContextSource { per_user_last, fixed };

inline const char* to_string(ContextSource s) {
  return s == ContextSource::per_user_last ? "per_user_last" : "fixed";
}

inline ContextSource context_source_from_string(const std::string& s) {
  if (s == "per_user_last") return ContextSource::per_user_last;
  if (s == "fixed") return ContextSource::fixed;
  throw validation_error("unknown context source '" + s + "'");
}

struct TopKConfig {
  int k_rec = 10;
  ContextSource context_source = ContextSource::per_user_last;
  ContextVector fixed_context;  // used when context_source = fixed
};

struct RecLists {
  std::map<int, std::vector<int>> lists;  // user index -> item indices, best first
  std::vector<int> empty_flagged;         // users whose candidate set was empty
};

// Per user, the k_rec unrated items with the highest predicted score. Ties
// break toward the lower item index; a user's training items never appear.
// Scoring contexts come from the user's last test event (per_user_last) or
// from the fixed context; users absent from test fall back to the fixed one.
inline RecLists top_k_lists(const FactorModel& model, const Dataset& train,
                            const Dataset& test, const std::vector<int>& users,
                            const TopKConfig& cfg = {}) {
  const auto n_items = static_cast<int>(train.n_items());
  if (cfg.k_rec < 1 || cfg.k_rec > n_items)
    throw validation_error("top_k_lists: k_rec " + std::to_string(cfg.k_rec) +
                           " outside [1, " + std::to_string(n_items) + "]");

  std::vector<std::vector<char>> rated(train.n_users(), std::vector<char>(train.n_items(), 0));
  for (const auto& ev : train.events)
    rated[static_cast<std::size_t>(train.user_index.at(ev.user_id))]
         [static_cast<std::size_t>(train.item_index.at(ev.item_id))] = 1;

  std::map<int, ContextVector> last_context;
  if (model.hyper.prediction_rule == PredictionRule::power &&
      cfg.context_source == ContextSource::per_user_last)
    for (const auto& ev : test.events)
      last_context[test.user_index.at(ev.user_id)] = test.encoder.encode(ev);

  RecLists out;
  std::vector<std::pair<double, int>> scored;
  for (const int user : users) {
    const ContextVector* context = &cfg.fixed_context;
    if (const auto it = last_context.find(user); it != last_context.end())
      context = &it->second;

    scored.clear();
    for (int item = 0; item < n_items; ++item) {
      if (rated[static_cast<std::size_t>(user)][static_cast<std::size_t>(item)]) continue;
      scored.emplace_back(predict_indexed(model, user, item, *context), item);
    }
    if (scored.empty()) {
      out.lists[user] = {};
      out.empty_flagged.push_back(user);
      continue;
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    auto& list = out.lists[user];
    const auto take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(cfg.k_rec));
    for (std::size_t i = 0; i < take; ++i) list.push_back(scored[i].second);
  }
  return out;
}

// Per-item occurrence counts over the training events, indexed densely.
inline std::vector<double> train_item_counts(const Dataset& train) {
  std::vector<double> counts(train.n_items(), 0.0);
  for (const auto& ev : train.events)
    counts[static_cast<std::size_t>(train.item_index.at(ev.item_id))] += 1.0;
  return counts;
}

// Degree of Matthew effect: zipf_slope of recommended-item counts minus
// zipf_slope of training-item counts. More negative means recommendations
// concentrate popularity harder than the data already does.
inline double matthew_degree(const std::map<int, std::vector<int>>& rec_lists,
                             const std::vector<double>& item_counts) {
  if (rec_lists.empty()) throw validation_error("matthew_degree: no recommendation lists");
  std::vector<double> rec_counts(item_counts.size(), 0.0);
  for (const auto& [user, list] : rec_lists)
    for (const int item : list) {
      if (item < 0 || static_cast<std::size_t>(item) >= rec_counts.size())
        throw validation_error("matthew_degree: item index " + std::to_string(item) +
                               " out of range");
      rec_counts[static_cast<std::size_t>(item)] += 1.0;
    }

  double s_rec = 0.0, s_data = 0.0;
  try {
    s_rec = zipf_slope(rec_counts);
  } catch (const fit_error& e) {
    throw fit_error(std::string("recommendation side: ") + e.what());
  }
  try {
    s_data = zipf_slope(item_counts);
  } catch (const fit_error& e) {
    throw fit_error(std::string("data side: ") + e.what());
  }
  return s_rec - s_data;
}

struct EvalReport {
  std::string algorithm;
  PredictionRule prediction_rule = PredictionRule::linear;
  double gamma = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double matthew_degree = 0.0;  // NaN when either side's fit is undefined
  std::size_t n_test = 0;
  std::int64_t clip_count = 0;
};

// Full held-out evaluation: clipped-accuracy metrics over the test events
// plus the Matthew degree of the top-k lists for every test user. An
// undefined Matthew fit is reported as NaN rather than failing the run.
inline EvalReport evaluate(const std::string& algorithm, const FactorModel& model,
                           const Dataset& train, const Dataset& test,
                           const TopKConfig& topk = {}) {
  if (test.n_events() == 0) throw data_error("evaluate: empty test set");

  const bool power = model.hyper.prediction_rule == PredictionRule::power;
  std::vector<double> predictions, truths;
  predictions.reserve(test.n_events());
  truths.reserve(test.n_events());
  std::vector<int> users;
  for (const auto& ev : test.events) {
    const int user = test.user_index.at(ev.user_id);
    const int item = test.item_index.at(ev.item_id);
    const ContextVector context = power ? test.encoder.encode(ev) : ContextVector{};
    predictions.push_back(predict_indexed(model, user, item, context));
    truths.push_back(ev.rating);
    users.push_back(user);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());

  EvalReport rep;
  rep.algorithm = algorithm;
  rep.prediction_rule = model.hyper.prediction_rule;
  rep.gamma = model.hyper.gamma;
  rep.n_test = test.n_events();
  rep.clip_count =
      static_cast<std::int64_t>(clip_predictions(predictions, train.rating_min, train.r_max));
  rep.mae = mae(predictions, truths);
  rep.rmse = rmse(predictions, truths);
  try {
    rep.matthew_degree = matthew_degree(top_k_lists(model, train, test, users, topk).lists,
                                        train_item_counts(train));
  } catch (const fit_error&) {
    rep.matthew_degree = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace powermat

#endif
