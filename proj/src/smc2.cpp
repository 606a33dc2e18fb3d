#include <hessmc/smc2.hpp>

#include <hessmc/parallel.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace hessmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_step_jacobian(std::size_t dim, double eps) { return static_cast<double>(dim) * std::log(eps); }

Vector zeros(std::size_t dim) { return Vector(dim, 0.0); }

}  // namespace

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::rw:
      return "rw";
    case ProposalKind::fo:
      return "fo";
    case ProposalKind::so:
      return "so";
  }
  return "?";
}

ProposalKind parse_proposal_kind(std::string_view name) {
  if (name == "rw") return ProposalKind::rw;
  if (name == "fo") return ProposalKind::fo;
  if (name == "so") return ProposalKind::so;
  throw std::invalid_argument("unknown proposal '" + std::string(name) + "' (expected rw, fo or so)");
}

int pf_order(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::rw:
      return 0;
    case ProposalKind::fo:
      return 1;
    case ProposalKind::so:
      return 2;
  }
  return 0;
}

Target::Target(PriorSpec prior, Likelihood likelihood)
    : prior_(std::move(prior)), likelihood_(std::move(likelihood)) {}

Target Target::particle_filter(const ModelSpec& model, std::shared_ptr<const Dataset> data, CrnStreams streams,
                               PfConfig config) {
  auto likelihood = [model, data = std::move(data), streams, config](const ParamVector& theta, std::uint64_t sample,
                                                                      std::uint64_t iteration, int order) {
    PfConfig run = config;
    run.order = order;
    return run_pf(model, theta, *data, streams, sample, iteration, run);
  };
  return {model.prior(), std::move(likelihood)};
}

TargetValue Target::operator()(const ParamVector& theta, std::uint64_t sample, std::uint64_t iteration,
                               int order) const {
  TargetValue out;
  const std::size_t d = prior_.dim();
  out.grad = zeros(d);
  out.neg_hess = SymMatrix(d);
  const double log_prior = prior_logpdf(prior_, theta);
  if (log_prior == kNegInf) return out;

  const LogLikEstimate estimate = likelihood_(theta, sample, iteration, order);
  out.loglik = estimate.loglik;
  if (estimate.degenerate || !std::isfinite(estimate.loglik)) {
    out.loglik = kNegInf;
    return out;
  }
  out.log_target = log_prior + estimate.loglik;
  // the uniform prior contributes nothing to either derivative inside its support
  if (estimate.grad) out.grad = *estimate.grad;
  if (estimate.neg_hess) out.neg_hess = *estimate.neg_hess;
  return out;
}

Vector half_kick(const Vector& p, const Vector& grad, double eps) { return p + (0.5 * eps) * grad; }

ParamVector drift(const ParamVector& theta, const Vector& p_half, double eps, const SymMatrix* precond) {
  const Vector direction = precond != nullptr ? (*precond) * p_half : p_half;
  return theta + eps * direction;
}

Move propose_rw(const ParamVector& theta, double eps, const Vector& noise) {
  const std::size_t d = theta.size();
  const SymMatrix cov = (eps * eps) * SymMatrix::identity(d);
  Move move;
  move.theta = theta + eps * noise;
  move.momentum_out = noise;
  move.log_q = mvn_logpdf(move.theta, theta, cov);
  move.log_L = mvn_logpdf(theta, move.theta, cov);
  return move;
}

Move propose_fo(const ParamVector& theta, const Vector& grad, double eps, const Vector& noise,
                const Evaluator& evaluate) {
  const std::size_t d = theta.size();
  const SymMatrix identity = SymMatrix::identity(d);
  const Vector zero = zeros(d);
  const double log_jacobian = log_step_jacobian(d, eps);

  const Vector& p = noise;
  const Vector p_half = half_kick(p, grad, eps);
  Move move;
  move.theta = drift(theta, p_half, eps, nullptr);
  move.target = evaluate(move.theta);
  move.log_q = mvn_logpdf(p, zero, identity) - log_jacobian;
  if (!move.target.finite()) {
    move.momentum_out = p_half;
    move.log_L = kNegInf;
    return move;
  }
  move.momentum_out = half_kick(p_half, move.target.grad, eps);
  move.log_L = mvn_logpdf(-move.momentum_out, zero, identity) - log_jacobian;
  return move;
}

Move propose_so(const ParamVector& theta, const Vector& grad, const SymMatrix& neg_hess, double eps,
                const Vector& noise, const Evaluator& evaluate) {
  const auto chol = try_cholesky(neg_hess);
  if (!chol) {
    Move move = propose_fo(theta, grad, eps, noise, evaluate);
    move.fallback_used = true;
    return move;
  }

  const std::size_t d = theta.size();
  const Vector zero = zeros(d);
  const SymMatrix precond = inverse_from_cholesky(*chol);
  // both densities use the preconditioner from the starting point, so the two
  // Jacobian terms are equal; they are still carried explicitly
  const double log_det_precond = log_det_spd(precond);
  const double log_jacobian = log_step_jacobian(d, eps);

  const Vector p = mvn_sample(zero, *chol, noise);
  const Vector p_half = half_kick(p, grad, eps);
  Move move;
  move.theta = drift(theta, p_half, eps, &precond);
  move.target = evaluate(move.theta);
  move.log_q = mvn_logpdf(p, zero, *chol) - log_jacobian - log_det_precond;
  if (!move.target.finite()) {
    move.momentum_out = p_half;
    move.log_L = kNegInf;
    return move;
  }
  move.momentum_out = half_kick(p_half, move.target.grad, eps);
  move.log_L = mvn_logpdf(-move.momentum_out, zero, *chol) - log_jacobian - log_det_precond;
  return move;
}

namespace {

/// Normalizes, records a snapshot and resamples when the ESS drops below the threshold.
void reweight(SamplerPopulation& population, const CrnStreams& streams, const SamplerOptions& options) {
  NormalizedWeights normalized;
  try {
    normalized = normalize_weights(population.log_v);
  } catch (const DegenerateCloud&) {
    population.collapsed = true;
    return;
  }
  const double current_ess = ess(normalized.weights);
  population.ess_history.push_back(current_ess);

  Snapshot snap;
  snap.ess = current_ess;
  snap.weights = normalized.weights;
  snap.thetas.reserve(population.samples.size());
  for (const auto& s : population.samples) snap.thetas.push_back(s.theta);
  population.snapshots.push_back(std::move(snap));

  const double threshold = options.ess_fraction * static_cast<double>(population.samples.size());
  if (current_ess >= threshold) return;

  const double u =
      streams.stream({.iteration = population.iteration, .purpose = Purpose::sampler_resample}).uniform();
  const auto ancestors = systematic_resample(normalized.weights, u);
  std::vector<SamplerSample> children;
  children.reserve(ancestors.size());
  for (std::size_t a : ancestors) children.push_back(population.samples[a]);
  population.samples = std::move(children);
  std::fill(population.log_v.begin(), population.log_v.end(), 0.0);
  ++population.resamples;
}

void check_options(const SamplerOptions& options) {
  if (options.samples < 2) throw std::invalid_argument("sampler needs at least two samples");
  if (!(options.proposal.epsilon > 0.0)) throw std::invalid_argument("step size must be positive");
}

}  // namespace

SamplerPopulation init_population(const Target& target, const CrnStreams& streams, const SamplerOptions& options) {
  check_options(options);
  const std::size_t n = options.samples;
  const int order = pf_order(options.proposal.kind);

  SamplerPopulation population;
  population.iteration = 0;
  population.samples.resize(n);
  population.log_v.assign(n, kNegInf);

  parallel_for(n, options.workers, [&](std::size_t i) {
    auto stream = streams.stream({.sample = i, .iteration = 0, .purpose = Purpose::prior_draw});
    auto& s = population.samples[i];
    s.theta = sample_prior(target.prior(), stream);
    s.target = target(s.theta, i, 0, order);
    s.momentum_out = zeros(s.theta.size());
    // q_1 is the prior, so the prior terms cancel and the weight is the likelihood estimate
    population.log_v[i] = s.target.finite() ? s.target.loglik : kNegInf;
  });

  reweight(population, streams, options);
  return population;
}

void step(SamplerPopulation& population, const Target& target, const CrnStreams& streams,
          const SamplerOptions& options) {
  check_options(options);
  if (population.collapsed) return;
  const std::size_t k = ++population.iteration;
  const std::size_t n = population.samples.size();
  const auto& proposal = options.proposal;
  const int order = pf_order(proposal.kind);

  std::vector<std::uint8_t> moved(n, 0);
  std::vector<std::uint8_t> fell_back(n, 0);

  parallel_for(n, options.workers, [&](std::size_t i) {
    auto& s = population.samples[i];
    if (population.log_v[i] == kNegInf) return;
    const std::size_t d = s.theta.size();

    auto stream = streams.stream({.sample = i, .iteration = k, .purpose = Purpose::momentum});
    Vector noise(d);
    for (double& z : noise) z = stream.normal();

    const Evaluator evaluate = [&](const ParamVector& theta) { return target(theta, i, k, order); };
    Move move;
    switch (proposal.kind) {
      case ProposalKind::rw:
        move = propose_rw(s.theta, proposal.epsilon, noise);
        move.target = evaluate(move.theta);
        break;
      case ProposalKind::fo:
        move = propose_fo(s.theta, s.target.grad, proposal.epsilon, noise, evaluate);
        break;
      case ProposalKind::so: {
        SymMatrix neg_hess = s.target.neg_hess;
        if (options.perturb_neg_hess) options.perturb_neg_hess(k, i, neg_hess);
        move = propose_so(s.theta, s.target.grad, neg_hess, proposal.epsilon, noise, evaluate);
        break;
      }
    }

    double log_v = kNegInf;
    if (move.target.finite()) {
      log_v = population.log_v[i] + (move.target.log_target - s.target.log_target);
      if (!options.lkernel_equals_proposal) log_v += move.log_L - move.log_q;
      if (std::isnan(log_v)) log_v = kNegInf;
    }
    population.log_v[i] = log_v;
    s.theta = move.theta;
    s.target = std::move(move.target);
    s.momentum_out = move.momentum_out;
    s.fallback_used = move.fallback_used;
    moved[i] = 1;
    fell_back[i] = move.fallback_used ? 1 : 0;
  });

  for (std::size_t i = 0; i < n; ++i) {
    population.moves += moved[i];
    population.fallbacks += fell_back[i];
  }
  population.last_fallbacks = std::move(fell_back);
  reweight(population, streams, options);
}

SamplerPopulation run_smc2(const Target& target, const CrnStreams& streams, const SamplerOptions& options) {
  SamplerPopulation population = init_population(target, streams, options);
  for (std::size_t k = 1; k < options.iterations && !population.collapsed; ++k) {
    step(population, target, streams, options);
  }
  return population;
}

Vector recycled_estimate(const SamplerPopulation& population, const std::function<Vector(const ParamVector&)>& f) {
  if (population.snapshots.empty()) throw std::logic_error("recycled_estimate: no completed iterations");
  double total_ess = 0.0;
  for (const auto& snap : population.snapshots) total_ess += snap.ess;

  Vector estimate;
  bool first = true;
  for (const auto& snap : population.snapshots) {
    const double lambda = snap.ess / total_ess;
    for (std::size_t i = 0; i < snap.thetas.size(); ++i) {
      if (snap.weights[i] == 0.0) continue;
      const Vector value = f(snap.thetas[i]);
      if (first) {
        estimate = Vector(value.size(), 0.0);
        first = false;
      }
      estimate += (lambda * snap.weights[i]) * value;
    }
  }
  return estimate;
}

Vector recycled_mean(const SamplerPopulation& population) {
  return recycled_estimate(population, [](const ParamVector& theta) { return theta; });
}

}  // namespace hessmc
