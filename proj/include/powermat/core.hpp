#ifndef POWERMAT_CORE_HPP
#define POWERMAT_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "powermat/types.hpp"

namespace powermat {

inline double dot(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw dimension_error("dot: length mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  double s = 0.0;
  for (std::size_t t = 0; t < u.size(); ++t) s += u[t] * v[t];
  return s;
}

// max(u.v, floor); keeps bases of real-valued powers strictly positive.
inline double clamped_dot(const Embedding& u, const Embedding& v, double floor) {
  return std::max(dot(u, v), floor);
}

inline double predict_linear(const Embedding& u, const Embedding& v, double r_max) {
  return r_max * dot(u, v);
}

// r_max * x^e with x the clamped dot product and e = alpha.c + beta*x,
// capped at +-exponent_cap. The raw value is returned unclipped; the metric
// layer clips to the rating scale.
inline double predict_power(const Embedding& u, const Embedding& v,
                            const std::vector<double>& alpha, const ContextVector& c,
                            double beta, const Hyperparams& hyper) {
  const double x = clamped_dot(u, v, hyper.dot_floor);
  const double e =
      std::clamp(dot(alpha, c) + beta * x, -hyper.exponent_cap, hyper.exponent_cap);
  return hyper.r_max * std::pow(x, e);
}

// Updated user/item factors from one SGD step.
struct FactorUpdate {
  Embedding u;
  Embedding v;
};

// Updated full parameter set from one context-aware SGD step.
struct PowermatUpdate {
  Embedding u;
  Embedding v;
  std::vector<double> alpha;
  double beta = 0.0;
};

namespace detail {

inline void require_finite(double value, const char* name) {
  if (!std::isfinite(value))
    throw numeric_error(std::string("numeric overflow: parameter '") + name +
                        "' became non-finite");
}

inline void require_finite(const std::vector<double>& values, const char* name) {
  for (double value : values) require_finite(value, name);
}

}  // namespace detail

// One joint SGD step of the context-aware model, exactly as printed: all
// four updates are computed from the same pre-step snapshot, the dot
// product enters unclamped (there are no powers here), and the regularizer
// carries scale 2/sigma with the printed sign (it grows the factor norms).
// Note the absence of a rating argument.
inline PowermatUpdate powermat_step_verbatim(const Embedding& u, const Embedding& v,
                                             const std::vector<double>& alpha, double beta,
                                             const ContextVector& c,
                                             const Hyperparams& hyper) {
  const double x = dot(u, v);
  const double ac = dot(alpha, c);
  const double coeff = beta * x + (beta * x + ac);  // multiplies v in the u update and vice versa

  PowermatUpdate out{u, v, alpha, beta};
  for (std::size_t t = 0; t < u.size(); ++t)
    out.u[t] = u[t] - hyper.gamma * (coeff * v[t] - (2.0 / hyper.sigma_u) * u[t]);
  for (std::size_t t = 0; t < v.size(); ++t)
    out.v[t] = v[t] - hyper.gamma * (coeff * u[t] - (2.0 / hyper.sigma_v) * v[t]);
  for (std::size_t t = 0; t < alpha.size(); ++t)
    out.alpha[t] = alpha[t] - hyper.gamma * x * c[t];
  out.beta = beta - hyper.gamma * x * x;

  detail::require_finite(out.u, "u");
  detail::require_finite(out.v, "v");
  detail::require_finite(out.alpha, "alpha");
  detail::require_finite(out.beta, "beta");
  return out;
}

// Negative log-posterior of the context-aware model with normal priors,
// on the clamped dot product. Minimized by the derived-mode step; recorded
// as a monitor for verbatim runs, which define no loss of their own.
inline double powermat_objective(const Embedding& u, const Embedding& v,
                                 const std::vector<double>& alpha, double beta,
                                 const ContextVector& c, const Hyperparams& hyper) {
  const double x = clamped_dot(u, v, hyper.dot_floor);
  return -(dot(alpha, c) + beta * x) * std::log(x) +
         dot(u, u) / (hyper.sigma_u * hyper.sigma_u) +
         dot(v, v) / (hyper.sigma_v * hyper.sigma_v);
}

// Gradient step on powermat_objective. When the dot product sits below the
// floor the clamp freezes x, so only the regularizer moves u and v; alpha
// and beta still see ln(x) at the floor. Rating-free, like the verbatim step.
inline PowermatUpdate powermat_step_derived(const Embedding& u, const Embedding& v,
                                            const std::vector<double>& alpha, double beta,
                                            const ContextVector& c,
                                            const Hyperparams& hyper) {
  const double raw = dot(u, v);
  const double ac = dot(alpha, c);
  const bool floored = raw < hyper.dot_floor;
  const double x = floored ? hyper.dot_floor : raw;
  const double lx = std::log(x);
  const double dJdx = floored ? 0.0 : -(beta * lx + (ac + beta * x) / x);

  PowermatUpdate out{u, v, alpha, beta};
  for (std::size_t t = 0; t < u.size(); ++t)
    out.u[t] = u[t] - hyper.gamma * (dJdx * v[t] + (2.0 / (hyper.sigma_u * hyper.sigma_u)) * u[t]);
  for (std::size_t t = 0; t < v.size(); ++t)
    out.v[t] = v[t] - hyper.gamma * (dJdx * u[t] + (2.0 / (hyper.sigma_v * hyper.sigma_v)) * v[t]);
  for (std::size_t t = 0; t < alpha.size(); ++t)
    out.alpha[t] = alpha[t] + hyper.gamma * lx * c[t];
  out.beta = beta + hyper.gamma * x * lx;

  detail::require_finite(out.u, "u");
  detail::require_finite(out.v, "v");
  detail::require_finite(out.alpha, "alpha");
  detail::require_finite(out.beta, "beta");
  return out;
}

// |x^x - rating/r_max| on the clamped dot product.
inline double dotmat_loss(const Embedding& u, const Embedding& v, double rating,
                          const Hyperparams& hyper) {
  if (!(rating >= 0.0 && rating <= hyper.r_max))
    throw validation_error("dotmat_loss: rating " + std::to_string(rating) +
                           " outside [0, " + std::to_string(hyper.r_max) + "]");
  const double x = clamped_dot(u, v, hyper.dot_floor);
  return std::abs(std::pow(x, x) - rating / hyper.r_max);
}

// Subgradient step on |x^x - rating/r_max|; sign(0) = 0 at the kink,
// d(x^x)/dx = x^x (ln x + 1).
inline FactorUpdate dotmat_step(const Embedding& u, const Embedding& v, double rating,
                                const Hyperparams& hyper) {
  if (!(rating >= 0.0 && rating <= hyper.r_max))
    throw validation_error("dotmat_step: rating " + std::to_string(rating) +
                           " outside [0, " + std::to_string(hyper.r_max) + "]");
  const double x = clamped_dot(u, v, hyper.dot_floor);
  const double e = std::pow(x, x) - rating / hyper.r_max;
  const double s = static_cast<double>(e > 0.0) - static_cast<double>(e < 0.0);
  const double g = s * std::pow(x, x) * (std::log(x) + 1.0);

  FactorUpdate out{u, v};
  for (std::size_t t = 0; t < u.size(); ++t) out.u[t] = u[t] - hyper.gamma * g * v[t];
  for (std::size_t t = 0; t < v.size(); ++t) out.v[t] = v[t] - hyper.gamma * g * u[t];

  detail::require_finite(out.u, "u");
  detail::require_finite(out.v, "v");
  return out;
}

// Context-free baseline: squared error on the normalized rating with a
// shrinking L2 regularizer, lambda = 1/sigma^2.
inline FactorUpdate classic_mf_step(const Embedding& u, const Embedding& v, double rating,
                                    const Hyperparams& hyper) {
  if (!(rating >= 0.0 && rating <= hyper.r_max))
    throw validation_error("classic_mf_step: rating " + std::to_string(rating) +
                           " outside [0, " + std::to_string(hyper.r_max) + "]");
  const double e = dot(u, v) - rating / hyper.r_max;
  const double lu = 1.0 / (hyper.sigma_u * hyper.sigma_u);
  const double lv = 1.0 / (hyper.sigma_v * hyper.sigma_v);

  FactorUpdate out{u, v};
  for (std::size_t t = 0; t < u.size(); ++t)
    out.u[t] = u[t] - hyper.gamma * (e * v[t] + lu * u[t]);
  for (std::size_t t = 0; t < v.size(); ++t)
    out.v[t] = v[t] - hyper.gamma * (e * u[t] + lv * v[t]);

  detail::require_finite(out.u, "u");
  detail::require_finite(out.v, "v");
  return out;
}

}  // namespace powermat

#endif
