#ifndef HESSMC_PF_HPP
#define HESSMC_PF_HPP

#include <hessmc/linalg.hpp>
#include <hessmc/model_spec.hpp>
#include <hessmc/models.hpp>
#include <hessmc/rng.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Common-random-number particle filter returning log p(y|theta) and its derivatives.
 *
 * Each particle carries its state and its log-weight as jets, so the gradient
 * and Hessian of the likelihood estimate are propagated forward alongside the
 * values. All noise is read from keyed CRN streams: with the resampling
 * ancestry held fixed the estimate is a smooth deterministic function of
 * theta, and the returned derivatives are its exact derivatives.
 */

namespace hessmc {

class DegenerateCloud : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What a child inherits from its parent's log-weight derivatives at a resampling step.
enum class DerivativeCarry {
  /// Per-particle log-weight derivatives restart at zero after the segment total is folded in.
  /// The result is the exact derivative of the computed estimate.
  reset,
  /// Children keep the parent's derivatives minus the cloud average (path-space score and
  /// Louis-identity Hessian). Not the derivative of the estimate itself.
  recentre,
};

struct PfConfig {
  std::size_t particles = 500;
  /// 0: likelihood only, 1: plus gradient, 2: plus Hessian.
  int order = 0;
  /// Resample when ESS < ess_fraction * particles.
  double ess_fraction = 0.5;
  DerivativeCarry carry = DerivativeCarry::reset;
};

struct LogLikEstimate {
  double loglik = 0.0;
  /// Gradient of the log-likelihood estimate (order >= 1).
  std::optional<Vector> grad;
  /// Negative Hessian of the log-likelihood estimate (order == 2).
  std::optional<SymMatrix> neg_hess;
  bool degenerate = false;
  std::size_t resample_count = 0;
  /// Hash of every discrete decision taken (resampling times, ancestors, clamps). Two runs
  /// with equal fingerprints followed the same branch of the piecewise-smooth estimate.
  std::uint64_t branch_fingerprint = 0;
};

struct NormalizedWeights {
  std::vector<double> weights;
  /// logsumexp(log_weights) - log N
  double log_mean_weight = 0.0;
};

/// Fixed-order pairwise summation.
double pairwise_sum(std::span<const double> values);

/// Throws DegenerateCloud when no log-weight is finite.
NormalizedWeights normalize_weights(std::span<const double> log_weights);

/// 1 / sum(w^2) for normalized weights.
double ess(std::span<const double> normalized);

/// Ancestor of child j is the parent whose cumulative-weight interval contains (u + j) / N.
std::vector<std::size_t> systematic_resample(std::span<const double> normalized, double u);

template <class Model, int Order>
struct ParticleCloud {
  using Scalar = typename Model::template Scalar<Order>;
  using State = typename Model::template State<Order>;

  std::vector<State> states;
  /// Log-weights since the last resampling, with their parameter derivatives.
  std::vector<Scalar> log_weights;
};

namespace detail {

template <std::size_t D>
struct DerivativeTotals {
  double loglik = 0.0;
  std::array<double, D> grad{};
  std::array<double, D * D> hess{};
};

/// Adds sum_j w_j g_j and sum_j w_j h_j (and, if asked, the spread term) to the totals.
template <std::size_t D, int O, class Scalar>
void fold_moments(const std::vector<Scalar>& log_weights, const std::vector<double>& w,
                  std::array<double, D>& mean_grad, std::array<double, D * D>& mean_hess, bool with_spread,
                  DerivativeTotals<D>& totals) {
  mean_grad.fill(0.0);
  mean_hess.fill(0.0);
  if constexpr (O >= 1) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      for (std::size_t a = 0; a < D; ++a) mean_grad[a] += w[j] * log_weights[j].g[a];
    }
    for (std::size_t a = 0; a < D; ++a) totals.grad[a] += mean_grad[a];
  }
  if constexpr (O >= 2) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      const auto& lw = log_weights[j];
      for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) {
          double term = lw.h[a * D + b];
          if (with_spread) term += (lw.g[a] - mean_grad[a]) * lw.g[b];
          mean_hess[a * D + b] += w[j] * term;
        }
    }
    for (std::size_t k = 0; k < D * D; ++k) totals.hess[k] += mean_hess[k];
  }
}

template <class Model, int O>
LogLikEstimate run_pf_impl(const Model& model, const ParamVector& theta, const Dataset& data,
                           const CrnStreams& streams, std::uint64_t sample_id, std::uint64_t iteration,
                           const PfConfig& config) {
  constexpr std::size_t D = Model::kParams;
  using Cloud = ParticleCloud<Model, O>;
  using Scalar = typename Cloud::Scalar;

  if (theta.size() != D) throw DimensionMismatch("run_pf: parameter dimension does not match model");
  if (config.particles < 2) throw std::invalid_argument("run_pf: at least two particles are required");
  if (data.observations.empty()) throw std::invalid_argument("run_pf: empty dataset");

  const std::size_t n = config.particles;
  const std::size_t length = data.observations.size();
  const auto th = seed_parameters<D, O>(theta);
  const double threshold = config.ess_fraction * static_cast<double>(n);
  const bool recentre = config.carry == DerivativeCarry::recentre;

  Cloud cloud;
  cloud.states.assign(n, model.template initial_state<O>(th));
  cloud.log_weights.assign(n, Scalar(0.0));
  auto next_states = cloud.states;
  auto next_weights = cloud.log_weights;
  std::vector<double> raw(n);

  DerivativeTotals<D> totals;
  std::array<double, D> mean_grad{};
  std::array<double, D * D> mean_hess{};
  BranchTrace trace;
  LogLikEstimate out;
  double noise[Model::kNoise];

  auto finish = [&] {
    out.loglik = totals.loglik;
    if constexpr (O >= 1) {
      Vector grad(D);
      for (std::size_t a = 0; a < D; ++a) grad[a] = totals.grad[a];
      out.grad = grad;
    }
    if constexpr (O >= 2) {
      SquareMatrix neg(D);
      for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) neg(a, b) = -totals.hess[a * D + b];
      out.neg_hess = SymMatrix(neg);
    }
    out.branch_fingerprint = trace.hash;
    return out;
  };

  for (std::size_t t = 0; t < length; ++t) {
    const double y = data.observations[t];
    for (std::size_t j = 0; j < n; ++j) {
      auto rs = streams.stream({sample_id, iteration, t, j, Purpose::pf_state});
      for (auto& z : noise) z = rs.normal();
      trace.site = t * n + j;
      Scalar increment = model.template advance<O>(th, cloud.states[j], noise, y, trace);
      if (std::isnan(increment.v)) increment = Scalar(-std::numeric_limits<double>::infinity());
      cloud.log_weights[j] += increment;
      raw[j] = cloud.log_weights[j].v;
    }

    NormalizedWeights normalized;
    try {
      normalized = normalize_weights(raw);
    } catch (const DegenerateCloud&) {
      out.degenerate = true;
      totals.loglik = -std::numeric_limits<double>::infinity();
      return finish();
    }
    const auto& w = normalized.weights;
    const bool last = t + 1 == length;
    const bool resample = !last && ess(w) < threshold;
    if (!last && !resample) continue;

    totals.loglik += normalized.log_mean_weight;
    if (last) {
      // recentred derivatives carry deviations, so the spread term enters once at the end
      fold_moments<D, O>(cloud.log_weights, w, mean_grad, mean_hess, true, totals);
      return finish();
    }
    fold_moments<D, O>(cloud.log_weights, w, mean_grad, mean_hess, !recentre, totals);

    const double u = streams.stream({sample_id, iteration, t, 0, Purpose::pf_resample}).uniform();
    const auto ancestors = systematic_resample(w, u);
    trace.site = t;
    std::uint64_t lineage = 0;
    for (std::size_t j = 0; j < n; ++j) lineage = mix64(lineage ^ (ancestors[j] + (j << 32U)));
    trace.mix(lineage);
    ++out.resample_count;

    for (std::size_t j = 0; j < n; ++j) {
      next_states[j] = cloud.states[ancestors[j]];
      Scalar child(0.0);
      if (recentre) {
        child = cloud.log_weights[ancestors[j]];
        child.v = 0.0;
        if constexpr (O >= 1)
          for (std::size_t a = 0; a < D; ++a) child.g[a] -= mean_grad[a];
        if constexpr (O >= 2)
          for (std::size_t k = 0; k < D * D; ++k) child.h[k] -= mean_hess[k];
      }
      next_weights[j] = child;
    }
    std::swap(cloud.states, next_states);
    std::swap(cloud.log_weights, next_weights);
  }
  return finish();
}

}  // namespace detail

/// Runs the filter over the whole series for one (sample, iteration) stream family.
template <class Model>
LogLikEstimate run_pf(const Model& model, const ParamVector& theta, const Dataset& data, const CrnStreams& streams,
                      std::uint64_t sample_id, std::uint64_t iteration, const PfConfig& config) {
  switch (config.order) {
    case 0:
      return detail::run_pf_impl<Model, 0>(model, theta, data, streams, sample_id, iteration, config);
    case 1:
      return detail::run_pf_impl<Model, 1>(model, theta, data, streams, sample_id, iteration, config);
    case 2:
      return detail::run_pf_impl<Model, 2>(model, theta, data, streams, sample_id, iteration, config);
    default:
      throw std::invalid_argument("run_pf: order must be 0, 1 or 2");
  }
}

LogLikEstimate run_pf(const ModelSpec& model, const ParamVector& theta, const Dataset& data,
                      const CrnStreams& streams, std::uint64_t sample_id, std::uint64_t iteration,
                      const PfConfig& config);

}  // namespace hessmc

#endif
