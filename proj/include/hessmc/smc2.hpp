#ifndef HESSMC_SMC2_HPP
#define HESSMC_SMC2_HPP

#include <hessmc/linalg.hpp>
#include <hessmc/model_spec.hpp>
#include <hessmc/models.hpp>
#include <hessmc/pf.hpp>
#include <hessmc/rng.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief SMC sampler over static parameters with particle-filter target estimates.
 *
 * Moves are random-walk (RW), first-order Langevin (FO) or Hessian-preconditioned
 * second-order (SO) proposals. FO and SO are written as one leapfrog step
 *
 *   p_half = p + (eps/2) G(theta),  theta' = theta + eps H p_half,  p' = p_half + (eps/2) G(theta')
 *
 * (H = I for FO), and both the proposal and the L-kernel densities are obtained
 * by a change of variables through that map.
 */

namespace hessmc {

enum class ProposalKind { rw, fo, so };

std::string_view to_string(ProposalKind kind);
ProposalKind parse_proposal_kind(std::string_view name);

/// Particle-filter derivative order each proposal pays for.
int pf_order(ProposalKind kind);

struct ProposalConfig {
  ProposalKind kind = ProposalKind::rw;
  double epsilon = 0.1;
};

/// log pi(theta) = log prior + log-likelihood estimate, with derivatives as requested.
struct TargetValue {
  double log_target = -std::numeric_limits<double>::infinity();
  double loglik = -std::numeric_limits<double>::infinity();
  /// Gradient of log pi.
  Vector grad;
  /// -Hessian of log pi.
  SymMatrix neg_hess;

  [[nodiscard]] bool finite() const { return log_target > -std::numeric_limits<double>::infinity(); }
};

class Target {
 public:
  using Likelihood = std::function<LogLikEstimate(const ParamVector& theta, std::uint64_t sample,
                                                  std::uint64_t iteration, int order)>;

  Target(PriorSpec prior, Likelihood likelihood);

  /// Particle-filter likelihood with per-(sample, iteration) CRN streams.
  static Target particle_filter(const ModelSpec& model, std::shared_ptr<const Dataset> data, CrnStreams streams,
                                PfConfig config);

  /// Outside the prior support the likelihood is not evaluated and log_target is -inf.
  TargetValue operator()(const ParamVector& theta, std::uint64_t sample, std::uint64_t iteration, int order) const;

  [[nodiscard]] const PriorSpec& prior() const { return prior_; }

 private:
  PriorSpec prior_;
  Likelihood likelihood_;
};

using Evaluator = std::function<TargetValue(const ParamVector& theta)>;

struct Move {
  ParamVector theta;
  TargetValue target;
  Vector momentum_out;
  double log_q = 0.0;
  double log_L = 0.0;
  bool fallback_used = false;
};

/// p + (eps/2) grad
Vector half_kick(const Vector& p, const Vector& grad, double eps);
/// theta + eps * precond * p_half; precond == nullptr means identity.
ParamVector drift(const ParamVector& theta, const Vector& p_half, double eps, const SymMatrix* precond);

/// theta' = theta + eps * noise. The target is left unevaluated.
Move propose_rw(const ParamVector& theta, double eps, const Vector& noise);

Move propose_fo(const ParamVector& theta, const Vector& grad, double eps, const Vector& noise,
                const Evaluator& evaluate);

/**
 * Second-order move with H = neg_hess^{-1} and momentum p ~ N(0, neg_hess).
 * When neg_hess is not positive definite the FO move is made instead and
 * fallback_used is set.
 */
Move propose_so(const ParamVector& theta, const Vector& grad, const SymMatrix& neg_hess, double eps,
                const Vector& noise, const Evaluator& evaluate);

struct SamplerSample {
  ParamVector theta;
  TargetValue target;
  Vector momentum_out;
  bool fallback_used = false;
};

/// Weighted population state recorded at the end of one iteration, before resampling.
struct Snapshot {
  std::vector<ParamVector> thetas;
  std::vector<double> weights;
  double ess = 0.0;
};

struct SamplerPopulation {
  std::vector<SamplerSample> samples;
  std::vector<double> log_v;
  std::size_t iteration = 0;
  std::vector<double> ess_history;
  std::vector<Snapshot> snapshots;
  std::size_t moves = 0;
  std::size_t fallbacks = 0;
  std::size_t resamples = 0;
  /// Per-sample fallback flags of the latest move, indexed before resampling.
  std::vector<std::uint8_t> last_fallbacks;
  /// Every weight became zero; the run cannot continue.
  bool collapsed = false;
};

/// Called with (iteration, sample, -Hessian copy) before an SO move; used for fault injection.
using NegHessHook = std::function<void(std::size_t iteration, std::size_t sample, SymMatrix& neg_hess)>;

struct SamplerOptions {
  std::size_t samples = 32;
  /// Total iterations, counting the prior initialisation as the first.
  std::size_t iterations = 15;
  ProposalConfig proposal;
  std::size_t workers = 1;
  double ess_fraction = 0.5;
  /// Self-test: drop the L-kernel / proposal ratio from the weight update.
  bool lkernel_equals_proposal = false;
  NegHessHook perturb_neg_hess;
};

SamplerPopulation init_population(const Target& target, const CrnStreams& streams, const SamplerOptions& options);

/// One move-reweight-resample iteration.
void step(SamplerPopulation& population, const Target& target, const CrnStreams& streams,
          const SamplerOptions& options);

SamplerPopulation run_smc2(const Target& target, const CrnStreams& streams, const SamplerOptions& options);

/// Sum over iterations of ESS-proportional weights times that iteration's weighted average of f.
Vector recycled_estimate(const SamplerPopulation& population, const std::function<Vector(const ParamVector&)>& f);
Vector recycled_mean(const SamplerPopulation& population);

}  // namespace hessmc

#endif
