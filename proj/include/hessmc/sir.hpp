#ifndef HESSMC_SIR_HPP
#define HESSMC_SIR_HPP

#include <hessmc/models.hpp>

#include <array>
#include <cmath>
#include <cstddef>

/**
 * \file
 * \brief Discrete-time stochastic SIR model with Poisson observations of I.
 *
 *   S_t = S_{t-1} - beta I_{t-1} S_{t-1} + e_beta
 *   I_t = I_{t-1} + beta I_{t-1} S_{t-1} - gamma I_{t-1} - e_beta + e_gamma
 *   R_t = N_pop - S_t - I_t
 *   y_t ~ Poisson(I_t)
 *
 * with parameters ordered (beta, gamma) and e_beta, e_gamma ~ N(0, noise_variance).
 */

namespace hessmc {

struct SirOptions {
  double population = 763.0;
  double initial_infected = 1.0;
  double noise_variance = 0.5;
  double min_infected = 1e-6;
};

inline constexpr std::size_t kSirBeta = 0;
inline constexpr std::size_t kSirGamma = 1;
inline constexpr std::size_t kSirS = 0;
inline constexpr std::size_t kSirI = 1;

template <int O>
using SirScalar = Jet<2, O>;
template <int O>
using SirTheta = std::array<SirScalar<O>, 2>;
/// (S, I); R is implied by the population total.
template <int O>
using SirState = std::array<SirScalar<O>, 2>;

/**
 * One step of the compartment dynamics. `noise` holds two standard normals,
 * scaled internally by sqrt(noise_variance). I is floored at min_infected and
 * S clamped into [0, N_pop]; a clamped compartment loses its derivatives.
 */
template <int O>
SirState<O> sir_step(const SirTheta<O>& theta, const SirState<O>& state, const double* noise,
                     const SirOptions& options, BranchTrace* trace = nullptr) {
  const double scale = std::sqrt(options.noise_variance);
  const double e_beta = scale * noise[0];
  const double e_gamma = scale * noise[1];
  const auto& s = state[kSirS];
  const auto& i = state[kSirI];
  const auto infections = theta[kSirBeta] * i * s;

  SirState<O> next{s - infections + e_beta, i + infections - theta[kSirGamma] * i - e_beta + e_gamma};

  bool s_clamped = false;
  bool i_clamped = false;
  next[kSirS] = clamp(next[kSirS], 0.0, options.population, &s_clamped);
  next[kSirI] = clamp(next[kSirI], options.min_infected, HUGE_VAL, &i_clamped);
  if (trace != nullptr && (s_clamped || i_clamped)) {
    trace->mix((s_clamped ? 1U : 0U) | (i_clamped ? 2U : 0U));
  }
  return next;
}

template <int O>
SirScalar<O> sir_obs_logdensity(const SirState<O>& state, double y) {
  return poisson_logpdf(y, state[kSirI]);
}

inline double sir_recovered(double s, double i, const SirOptions& options) {
  return options.population - s - i;
}

class SirModel {
 public:
  static constexpr std::size_t kParams = 2;
  static constexpr std::size_t kState = 2;
  static constexpr std::size_t kNoise = 2;

  template <int O>
  using Scalar = SirScalar<O>;
  template <int O>
  using Theta = SirTheta<O>;
  template <int O>
  using State = SirState<O>;

  explicit SirModel(SirOptions options = {}) : options_(options) {}

  [[nodiscard]] const SirOptions& options() const { return options_; }

  template <int O>
  State<O> initial_state(const Theta<O>& /*theta*/) const {
    return {Scalar<O>(options_.population - options_.initial_infected), Scalar<O>(options_.initial_infected)};
  }

  template <int O>
  Scalar<O> advance(const Theta<O>& theta, State<O>& state, const double* noise, double y,
                    BranchTrace& trace) const {
    state = sir_step(theta, state, noise, options_, &trace);
    return sir_obs_logdensity(state, y);
  }

  static PriorSpec default_prior() { return {Vector{0.0, 0.0}, Vector{1.0, 1.0}}; }
  static ParamVector default_truth() { return {0.6, 0.3}; }

 private:
  SirOptions options_;
};

}  // namespace hessmc

#endif
