#ifndef POWERMAT_TYPES_HPP
#define POWERMAT_TYPES_HPP

#include <string>
#include <vector>

#include "powermat/errors.hpp"

namespace powermat {

// Latent feature vector, length k.
using Embedding = std::vector<double>;

// Encoded context, length d (the encoder's output dimension).
using ContextVector = std::vector<double>;

enum class PredictionRule { linear, power };
enum class GradientMode { verbatim, derived };

inline const char* to_string(PredictionRule r) {
  return r == PredictionRule::linear ? "linear" : "power";
}

inline const char* to_string(GradientMode m) {
  return m == GradientMode::verbatim ? "verbatim" : "derived";
}

inline PredictionRule prediction_rule_from_string(const std::string& s) {
  if (s == "linear") return PredictionRule::linear;
  if (s == "power") return PredictionRule::power;
  throw validation_error("unknown prediction_rule '" + s + "' (expected linear|power)");
}

inline GradientMode gradient_mode_from_string(const std::string& s) {
  if (s == "verbatim") return GradientMode::verbatim;
  if (s == "derived") return GradientMode::derived;
  throw validation_error("unknown gradient_mode '" + s + "' (expected verbatim|derived)");
}

struct Hyperparams {
  double gamma = 0.01;          // SGD step size
  double sigma_u = 1.0;         // prior scale of user factors
  double sigma_v = 1.0;         // prior scale of item factors
  double r_max = 5.0;           // rating-scale ceiling
  int k = 8;                    // latent dimension
  double dot_floor = 1e-6;      // clamp floor for dot products used as power bases
  double exponent_cap = 50.0;   // magnitude cap on exponents
  PredictionRule prediction_rule = PredictionRule::linear;
  GradientMode gradient_mode = GradientMode::verbatim;

  void validate() const {
    if (!(gamma > 0.0)) throw validation_error("hyperparams: gamma must be > 0");
    if (!(sigma_u > 0.0)) throw validation_error("hyperparams: sigma_u must be > 0");
    if (!(sigma_v > 0.0)) throw validation_error("hyperparams: sigma_v must be > 0");
    if (!(r_max > 0.0)) throw validation_error("hyperparams: r_max must be > 0");
    if (k < 1) throw validation_error("hyperparams: k must be >= 1");
    if (!(dot_floor > 0.0 && dot_floor < 1.0))
      throw validation_error("hyperparams: dot_floor must be in (0, 1)");
    if (!(exponent_cap > 0.0)) throw validation_error("hyperparams: exponent_cap must be > 0");
  }
};

// Learnable state shared by all three algorithms. Embeddings are keyed by
// the dense user/item indices of the dataset the model was initialized on.
// alpha/beta are only touched by the context-aware updates; the baselines
// carry them along untouched.
struct FactorModel {
  std::vector<Embedding> user_embeddings;
  std::vector<Embedding> item_embeddings;
  std::vector<double> alpha;  // context coefficients, length d
  double beta = 0.0;
  Hyperparams hyper;
};

}  // namespace powermat

#endif
