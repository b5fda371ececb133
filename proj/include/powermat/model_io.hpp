#ifndef POWERMAT_MODEL_IO_HPP
#define POWERMAT_MODEL_IO_HPP

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "powermat/dataset.hpp"
#include "powermat/errors.hpp"
#include "powermat/types.hpp"

namespace powermat {

inline constexpr int kModelSchemaVersion = 1;

// A deserialized snapshot: the factor model plus an event-free Dataset
// carrying the index maps, encoder, and rating bounds needed to score raw
// (user, item, context-codes) queries.
struct LoadedModel {
  FactorModel model;
  Dataset index_view;
};

namespace detail {

inline nlohmann::json hyper_to_json(const Hyperparams& h) {
  return {{"gamma", h.gamma},
          {"sigma_u", h.sigma_u},
          {"sigma_v", h.sigma_v},
          {"r_max", h.r_max},
          {"k", h.k},
          {"dot_floor", h.dot_floor},
          {"exponent_cap", h.exponent_cap},
          {"prediction_rule", to_string(h.prediction_rule)},
          {"gradient_mode", to_string(h.gradient_mode)}};
}

inline Hyperparams hyper_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.gamma = j.at("gamma").get<double>();
  h.sigma_u = j.at("sigma_u").get<double>();
  h.sigma_v = j.at("sigma_v").get<double>();
  h.r_max = j.at("r_max").get<double>();
  h.k = j.at("k").get<int>();
  h.dot_floor = j.at("dot_floor").get<double>();
  h.exponent_cap = j.at("exponent_cap").get<double>();
  h.prediction_rule = prediction_rule_from_string(j.at("prediction_rule").get<std::string>());
  h.gradient_mode = gradient_mode_from_string(j.at("gradient_mode").get<std::string>());
  return h;
}

inline nlohmann::json encoder_to_json(const ContextEncoder& enc) {
  return {{"scheme", to_string(enc.scheme)},
          {"column_names", enc.column_names},
          {"categories", enc.categories},
          {"col_min", enc.col_min},
          {"col_max", enc.col_max}};
}

inline ContextEncoder encoder_from_json(const nlohmann::json& j) {
  ContextEncoder enc;
  enc.scheme = context_scheme_from_string(j.at("scheme").get<std::string>());
  enc.column_names = j.at("column_names").get<std::vector<std::string>>();
  enc.categories = j.at("categories").get<std::vector<std::vector<int>>>();
  enc.col_min = j.at("col_min").get<std::vector<double>>();
  enc.col_max = j.at("col_max").get<std::vector<double>>();
  if (enc.scheme == ContextScheme::one_hot) {
    enc.offsets.resize(enc.categories.size());
    enc.dim = 0;
    for (std::size_t c = 0; c < enc.categories.size(); ++c) {
      enc.offsets[c] = enc.dim;
      enc.dim += enc.categories[c].size();
    }
  } else {
    enc.dim = enc.column_names.size();
  }
  return enc;
}

}  // namespace detail

// Writes a self-contained snapshot: parameters, the id maps, the fitted
// encoder, and the rating bounds of the training data.
inline void save_model(const FactorModel& model, const Dataset& data, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = kModelSchemaVersion;
  j["hyper"] = detail::hyper_to_json(model.hyper);
  j["rating_min"] = data.rating_min;
  j["users"] = data.user_ids;
  j["items"] = data.item_ids;
  j["user_embeddings"] = model.user_embeddings;
  j["item_embeddings"] = model.item_embeddings;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["encoder"] = detail::encoder_to_json(data.encoder);

  std::ofstream out(path);
  if (!out) throw data_error("cannot write model to '" + path + "'");
  out << j.dump(2) << "\n";
}

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open model '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("model '" + path + "' is not valid JSON: " + e.what());
  }

  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw data_error("model '" + path + "' has schema_version " + std::to_string(version) +
                       ", expected " + std::to_string(kModelSchemaVersion));

    LoadedModel out;
    out.model.hyper = detail::hyper_from_json(j.at("hyper"));
    out.model.user_embeddings = j.at("user_embeddings").get<std::vector<Embedding>>();
    out.model.item_embeddings = j.at("item_embeddings").get<std::vector<Embedding>>();
    out.model.alpha = j.at("alpha").get<std::vector<double>>();
    out.model.beta = j.at("beta").get<double>();

    out.index_view.rating_min = j.at("rating_min").get<double>();
    out.index_view.r_max = out.model.hyper.r_max;
    out.index_view.user_ids = j.at("users").get<std::vector<std::string>>();
    out.index_view.item_ids = j.at("items").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < out.index_view.user_ids.size(); ++i)
      out.index_view.user_index[out.index_view.user_ids[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < out.index_view.item_ids.size(); ++i)
      out.index_view.item_index[out.index_view.item_ids[i]] = static_cast<int>(i);
    out.index_view.encoder = detail::encoder_from_json(j.at("encoder"));

    const auto k = static_cast<std::size_t>(out.model.hyper.k);
    if (out.model.user_embeddings.size() != out.index_view.user_ids.size() ||
        out.model.item_embeddings.size() != out.index_view.item_ids.size())
      throw data_error("model '" + path + "': embedding row counts disagree with the id lists");
    for (const auto& rows : {out.model.user_embeddings, out.model.item_embeddings})
      for (const auto& row : rows)
        if (row.size() != k)
          throw data_error("model '" + path + "': embedding width disagrees with k");
    if (out.model.alpha.size() != out.index_view.encoder.dim)
      throw data_error("model '" + path + "': alpha length disagrees with the encoder");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("model '" + path + "' is missing fields: " + e.what());
  }
}

}  // namespace powermat

#endif
