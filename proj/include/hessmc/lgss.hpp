#ifndef HESSMC_LGSS_HPP
#define HESSMC_LGSS_HPP

#include <hessmc/models.hpp>

#include <array>
#include <cstddef>

/**
 * \file
 * \brief Linear Gaussian state-space model.
 *
 *   x_t | x_{t-1} ~ N(mu x_{t-1}, phi^2),   y_t | x_t ~ N(x_t, sigma^2),   x_0 = 0,
 *
 * with parameters ordered (mu, phi, sigma).
 */

namespace hessmc {

enum class LgssProposal { optimal, bootstrap };

struct LgssOptions {
  LgssProposal proposal = LgssProposal::optimal;
};

inline constexpr std::size_t kLgssMu = 0;
inline constexpr std::size_t kLgssPhi = 1;
inline constexpr std::size_t kLgssSigma = 2;

template <int O>
using LgssScalar = Jet<3, O>;
template <int O>
using LgssTheta = std::array<LgssScalar<O>, 3>;

/**
 * Draw from the locally optimal proposal p(x_t | x_{t-1}, y_t):
 *   x_t = rho^2 (y_t / sigma^2 + mu x_{t-1} / phi^2) + rho * noise,  1/rho^2 = 1/phi^2 + 1/sigma^2.
 */
template <int O>
LgssScalar<O> lgss_optimal_proposal(const LgssTheta<O>& theta, const LgssScalar<O>& x_prev, double y,
                                    double noise) {
  const auto& mu = theta[kLgssMu];
  const auto prec_state = reciprocal(square(theta[kLgssPhi]));
  const auto prec_obs = reciprocal(square(theta[kLgssSigma]));
  const auto rho2 = reciprocal(prec_state + prec_obs);
  const auto mean = rho2 * (prec_obs * y + prec_state * mu * x_prev);
  return mean + sqrt(rho2) * noise;
}

/// Incremental weight for the optimal proposal: log N(y_t; mu x_{t-1}, phi^2 + sigma^2).
template <int O>
LgssScalar<O> lgss_weight_logdensity(const LgssTheta<O>& theta, const LgssScalar<O>& x_prev, double y) {
  const auto mean = theta[kLgssMu] * x_prev;
  const auto var = square(theta[kLgssPhi]) + square(theta[kLgssSigma]);
  return gaussian_logpdf(y, mean, var);
}

/// Bootstrap transition x_t = mu x_{t-1} + phi * noise.
template <int O>
LgssScalar<O> lgss_transition(const LgssTheta<O>& theta, const LgssScalar<O>& x_prev, double noise) {
  return theta[kLgssMu] * x_prev + theta[kLgssPhi] * noise;
}

/// log N(y_t; x_t, sigma^2)
template <int O>
LgssScalar<O> lgss_obs_logdensity(const LgssTheta<O>& theta, const LgssScalar<O>& x, double y) {
  return gaussian_logpdf(y, x, square(theta[kLgssSigma]));
}

class LgssModel {
 public:
  static constexpr std::size_t kParams = 3;
  static constexpr std::size_t kState = 1;
  static constexpr std::size_t kNoise = 1;

  template <int O>
  using Scalar = LgssScalar<O>;
  template <int O>
  using Theta = LgssTheta<O>;
  template <int O>
  using State = std::array<Scalar<O>, kState>;

  explicit LgssModel(LgssOptions options = {}) : options_(options) {}

  [[nodiscard]] const LgssOptions& options() const { return options_; }

  template <int O>
  State<O> initial_state(const Theta<O>& /*theta*/) const {
    return {Scalar<O>(0.0)};
  }

  /// Moves one particle to time t and returns its log-weight increment.
  template <int O>
  Scalar<O> advance(const Theta<O>& theta, State<O>& state, const double* noise, double y,
                    BranchTrace& /*trace*/) const {
    if (options_.proposal == LgssProposal::optimal) {
      auto increment = lgss_weight_logdensity(theta, state[0], y);
      state[0] = lgss_optimal_proposal(theta, state[0], y, noise[0]);
      return increment;
    }
    state[0] = lgss_transition(theta, state[0], noise[0]);
    return lgss_obs_logdensity(theta, state[0], y);
  }

  static PriorSpec default_prior() { return {Vector{0.0, 0.0, 0.0}, Vector{1.0, 2.0, 2.0}}; }
  static ParamVector default_truth() { return {0.75, 1.0, 1.0}; }

 private:
  LgssOptions options_;
};

/// Exact log p(y_{1:T} | theta) by the Kalman prediction-error decomposition, x_0 = 0.
double kalman_loglik(const ParamVector& theta, const Dataset& data);

}  // namespace hessmc

#endif
