#ifndef POWERMAT_TRAINER_HPP
#define POWERMAT_TRAINER_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "powermat/core.hpp"
#include "powermat/dataset.hpp"
#include "powermat/errors.hpp"
#include "powermat/rng.hpp"

namespace powermat {

enum class Algorithm { powermat, dotmat, classic_mf };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::powermat: return "powermat";
    case Algorithm::dotmat: return "dotmat";
    default: return "classic_mf";
  }
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "powermat") return Algorithm::powermat;
  if (s == "dotmat") return Algorithm::dotmat;
  if (s == "classic_mf") return Algorithm::classic_mf;
  throw validation_error("unknown algorithm '" + s + "'");
}

struct TrainConfig {
  Algorithm algorithm = Algorithm::powermat;
  int epochs = 30;
  std::uint64_t shuffle_seed = 1;
  std::uint64_t init_seed = 2;
  double init_scale = 1.0;
  Hyperparams hyper;
  bool rating_blind = false;  // powermat only: forbid rating reads outright

  void validate() const {
    if (epochs < 1) throw validation_error("train: epochs must be >= 1");
    if (!(init_scale > 0.0)) throw validation_error("train: init_scale must be > 0");
    if (rating_blind && algorithm != Algorithm::powermat)
      throw validation_error(std::string("train: rating_blind is meaningless for ") +
                             to_string(algorithm) + ", its loss requires ratings");
    hyper.validate();
  }
};

struct TrainReport {
  std::vector<double> loss_trace;  // mean per-event loss per epoch
  std::vector<double> beta_trace;  // powermat only, one entry per step
  double user_norm = 0.0;
  double item_norm = 0.0;
  double alpha_norm = 0.0;
  double wall_seconds = 0.0;
  std::int64_t step_count = 0;
  std::int64_t clamp_events = 0;   // steps whose dot product sat below the floor
  std::int64_t rating_reads = 0;   // accesses through the gate; 0 for powermat
};

// The only path from an event to its rating during training. Counts every
// access; blind mode turns any access into a hard error.
class RatingGate {
 public:
  RatingGate(const Dataset& d, bool blind) : d_(&d), blind_(blind) {}

  double rating(std::size_t event_index) const {
    ++reads_;
    if (blind_)
      throw error("rating access attempted on a rating-blind training view");
    return d_->events[event_index].rating;
  }

  std::int64_t reads() const { return reads_; }

 private:
  const Dataset* d_;
  bool blind_;
  mutable std::int64_t reads_ = 0;
};

// Embeddings start uniform in (0, init_scale/sqrt(k)]: strictly positive so
// power bases are well defined, bounded so initial dots stay within (0, 1]
// at init_scale = 1. alpha and beta start at zero.
inline FactorModel init_model(const Dataset& data, const TrainConfig& cfg) {
  if (data.n_events() == 0) throw data_error("init_model: dataset has no events");
  const int k = cfg.hyper.k;
  const double bound = cfg.init_scale / std::sqrt(static_cast<double>(k));
  std::mt19937_64 g(cfg.init_seed);

  FactorModel m;
  m.hyper = cfg.hyper;
  const auto draw_rows = [&](std::size_t rows) {
    std::vector<Embedding> out(rows, Embedding(static_cast<std::size_t>(k)));
    for (auto& row : out)
      for (auto& e : row) e = bound * (1.0 - rng::u01(g));  // (0, bound]
    return out;
  };
  m.user_embeddings = draw_rows(data.n_users());
  m.item_embeddings = draw_rows(data.n_items());
  m.alpha.assign(data.encoder.dim, 0.0);
  m.beta = 0.0;
  return m;
}

namespace detail {

inline double frobenius(const std::vector<Embedding>& rows) {
  double s = 0.0;
  for (const auto& row : rows)
    for (const double e : row) s += e * e;
  return std::sqrt(s);
}

inline double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (const double e : v) s += e * e;
  return std::sqrt(s);
}

inline bool all_finite(const std::vector<Embedding>& rows) {
  for (const auto& row : rows)
    for (const double e : row)
      if (!std::isfinite(e)) return false;
  return true;
}

}  // namespace detail

// Epoch-level SGD over the dataset's events: one core step per event, order
// reshuffled every epoch from a single shuffle_seed stream. powermat events
// are routed rating-free; the gate proves it. Any non-finite parameter
// aborts with epoch/step coordinates rather than training through NaNs.
inline std::pair<FactorModel, TrainReport> train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.n_events() == 0) throw data_error("train: dataset has no events");

  FactorModel model = init_model(data, cfg);
  TrainReport report;
  RatingGate gate(data, cfg.rating_blind);
  const Hyperparams& hyper = cfg.hyper;
  const std::size_t n = data.n_events();

  std::vector<int> uidx(n), iidx(n);
  for (std::size_t i = 0; i < n; ++i) {
    uidx[i] = data.user_index.at(data.events[i].user_id);
    iidx[i] = data.item_index.at(data.events[i].item_id);
  }
  std::vector<ContextVector> ctx;
  if (cfg.algorithm == Algorithm::powermat) {
    ctx.reserve(n);
    for (const auto& ev : data.events) ctx.push_back(data.encoder.encode(ev));
    report.beta_trace.reserve(static_cast<std::size_t>(cfg.epochs) * n);
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 g(cfg.shuffle_seed);

  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng::shuffle(order, g);
    double loss_sum = 0.0;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t e = order[pos];
      Embedding& u = model.user_embeddings[static_cast<std::size_t>(uidx[e])];
      Embedding& v = model.item_embeddings[static_cast<std::size_t>(iidx[e])];
      try {
        switch (cfg.algorithm) {
          case Algorithm::powermat: {
            if (dot(u, v) < hyper.dot_floor) ++report.clamp_events;
            loss_sum += powermat_objective(u, v, model.alpha, model.beta, ctx[e], hyper);
            PowermatUpdate upd =
                hyper.gradient_mode == GradientMode::verbatim
                    ? powermat_step_verbatim(u, v, model.alpha, model.beta, ctx[e], hyper)
                    : powermat_step_derived(u, v, model.alpha, model.beta, ctx[e], hyper);
            u = std::move(upd.u);
            v = std::move(upd.v);
            model.alpha = std::move(upd.alpha);
            model.beta = upd.beta;
            report.beta_trace.push_back(model.beta);
            break;
          }
          case Algorithm::dotmat: {
            const double r = gate.rating(e);
            if (dot(u, v) < hyper.dot_floor) ++report.clamp_events;
            loss_sum += dotmat_loss(u, v, r, hyper);
            FactorUpdate upd = dotmat_step(u, v, r, hyper);
            u = std::move(upd.u);
            v = std::move(upd.v);
            break;
          }
          case Algorithm::classic_mf: {
            const double r = gate.rating(e);
            const double err = dot(u, v) - r / hyper.r_max;
            loss_sum += err * err;
            FactorUpdate upd = classic_mf_step(u, v, r, hyper);
            u = std::move(upd.u);
            v = std::move(upd.v);
            break;
          }
        }
      } catch (const numeric_error& ex) {
        throw numeric_error(std::string(ex.what()) + " (epoch " + std::to_string(epoch + 1) +
                            ", step " + std::to_string(pos + 1) + ", user '" +
                            data.events[e].user_id + "', item '" + data.events[e].item_id +
                            "')");
      }
      ++report.step_count;
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss) || !detail::all_finite(model.user_embeddings) ||
        !detail::all_finite(model.item_embeddings) || !std::isfinite(detail::l2(model.alpha)) ||
        !std::isfinite(model.beta))
      throw numeric_error("non-finite state after epoch " + std::to_string(epoch + 1));
    report.loss_trace.push_back(mean_loss);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.user_norm = detail::frobenius(model.user_embeddings);
  report.item_norm = detail::frobenius(model.item_embeddings);
  report.alpha_norm = detail::l2(model.alpha);
  report.rating_reads = gate.reads();
  return {std::move(model), std::move(report)};
}

namespace detail {

inline Embedding mean_embedding(const std::vector<Embedding>& rows) {
  Embedding mean(rows.front().size(), 0.0);
  for (const auto& row : rows)
    for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += row[t];
  for (auto& e : mean) e /= static_cast<double>(rows.size());
  return mean;
}

}  // namespace detail

// Prediction for dense indices; index -1 selects the cold-start path, the
// mean of the trained embeddings on that side. The linear rule ignores the
// context; the power rule requires it at the encoder's dimension.
inline double predict_indexed(const FactorModel& model, int user, int item,
                              const ContextVector& context) {
  const Embedding u = user >= 0
                          ? model.user_embeddings[static_cast<std::size_t>(user)]
                          : detail::mean_embedding(model.user_embeddings);
  const Embedding v = item >= 0
                          ? model.item_embeddings[static_cast<std::size_t>(item)]
                          : detail::mean_embedding(model.item_embeddings);
  if (model.hyper.prediction_rule == PredictionRule::linear)
    return predict_linear(u, v, model.hyper.r_max);
  return predict_power(u, v, model.alpha, context, model.beta, model.hyper);
}

// Id-level prediction against the dataset the model was trained on. Unknown
// ids fall back to the cold-start embeddings, so new users still get
// context-differentiated scores under the power rule.
inline double predict(const FactorModel& model, const std::string& user_id,
                      const std::string& item_id, const ContextVector& context,
                      const Dataset& data) {
  if (model.user_embeddings.empty() || model.item_embeddings.empty())
    throw data_error("predict: model has no trained embeddings");
  const auto uit = data.user_index.find(user_id);
  const auto iit = data.item_index.find(item_id);
  return predict_indexed(model, uit == data.user_index.end() ? -1 : uit->second,
                         iit == data.item_index.end() ? -1 : iit->second, context);
}

}  // namespace powermat

#endif
