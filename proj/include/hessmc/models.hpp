#ifndef HESSMC_MODELS_HPP
#define HESSMC_MODELS_HPP

#include <hessmc/jet.hpp>
#include <hessmc/linalg.hpp>
#include <hessmc/rng.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace hessmc {

using ParamVector = Vector;

/// State with first and second derivatives w.r.t. the D model parameters.
template <std::size_t D, std::size_t S>
using DiffState = std::array<Jet<D, 2>, S>;

/// Log-density value, gradient and Hessian w.r.t. the D model parameters.
template <std::size_t D>
using ObsLogDensity = Jet<D, 2>;

/// Independent uniform priors.
struct PriorSpec {
  Vector lower;
  Vector upper;

  [[nodiscard]] std::size_t dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const ParamVector& theta) const;
};

/// -sum log(upper - lower) inside the box, -inf outside. Gradient and Hessian are zero inside.
double prior_logpdf(const PriorSpec& prior, const ParamVector& theta);

ParamVector sample_prior(const PriorSpec& prior, RandomStream& stream);

enum class ModelKind { lgss, sir };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct Dataset {
  ModelKind model = ModelKind::lgss;
  std::vector<double> observations;
  ParamVector true_theta;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t length() const { return observations.size(); }
};

/// Records discrete branch decisions (clamps, resampling ancestry) taken during a filter run.
struct BranchTrace {
  std::uint64_t hash = 0x243f6a8885a308d3ULL;
  /// Position of the current decision (e.g. time * particles + particle).
  std::uint64_t site = 0;

  void mix(std::uint64_t value) { hash = mix64(hash ^ mix64(site) ^ value); }
};

/// The D model parameters as independent jet variables.
template <std::size_t D, int O>
std::array<Jet<D, O>, D> seed_parameters(const ParamVector& theta) {
  std::array<Jet<D, O>, D> out;
  for (std::size_t i = 0; i < D; ++i) out[i] = Jet<D, O>::variable(theta[i], i);
  return out;
}

/**
 * log N(y; mean, var) where mean and var both carry parameter derivatives.
 *
 * The derivatives are assembled through the two channels of the density: the
 * mean h and the variance R. With L = log N(y; h, R) the gradient is
 * L_h h' + L_R R' and the Hessian is
 *   L_hh h'h'^T + L_hR (h'R'^T + R'h'^T) + L_RR R'R'^T + L_h h'' + L_R R''.
 * Total derivatives h' and h'' already include any dependence of the state on
 * the parameters.
 */
template <std::size_t D, int O>
Jet<D, O> gaussian_logpdf(double y, const Jet<D, O>& mean, const Jet<D, O>& var) {
  const double r = y - mean.v;
  const double inv = 1.0 / var.v;
  const double value = -0.5 * (std::log(2.0 * std::numbers::pi * var.v) + r * r * inv);
  const double l_h = r * inv;
  const double l_r = 0.5 * inv * (r * r * inv - 1.0);
  const double l_hh = -inv;
  const double l_hr = -r * inv * inv;
  const double l_rr = inv * inv * (0.5 - r * r * inv);
  return chain2(mean, var, value, l_h, l_r, l_hh, l_hr, l_rr);
}

/// log Poisson(y; mean) = y log(mean) - mean - log(y!).
template <std::size_t D, int O>
Jet<D, O> poisson_logpdf(double y, const Jet<D, O>& mean) {
  const double m = mean.v;
  const double value = y * std::log(m) - m - std::lgamma(y + 1.0);
  return chain(mean, value, y / m - 1.0, -y / (m * m));
}

}  // namespace hessmc

#endif
