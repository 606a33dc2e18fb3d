#include <hessmc/model_spec.hpp>
#include <hessmc/models.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace hessmc {

bool PriorSpec::contains(const ParamVector& theta) const {
  if (theta.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    // open box: the uniform density is taken as zero on the boundary
    if (!(theta[i] > lower[i] && theta[i] < upper[i])) return false;
  }
  return true;
}

double prior_logpdf(const PriorSpec& prior, const ParamVector& theta) {
  if (!prior.contains(theta)) return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (std::size_t i = 0; i < prior.dim(); ++i) value -= std::log(prior.upper[i] - prior.lower[i]);
  return value;
}

ParamVector sample_prior(const PriorSpec& prior, RandomStream& stream) {
  ParamVector theta(prior.dim());
  for (std::size_t i = 0; i < prior.dim(); ++i) {
    double u = stream.uniform();
    while (u == 0.0) u = stream.uniform();
    theta[i] = prior.lower[i] + u * (prior.upper[i] - prior.lower[i]);
  }
  return theta;
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::lgss ? "lgss" : "sir"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lgss") return ModelKind::lgss;
  if (name == "sir") return ModelKind::sir;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected lgss or sir)");
}

std::size_t ModelSpec::param_dim() const {
  return kind == ModelKind::lgss ? LgssModel::kParams : SirModel::kParams;
}

PriorSpec ModelSpec::prior() const {
  return kind == ModelKind::lgss ? LgssModel::default_prior() : SirModel::default_prior();
}

ParamVector ModelSpec::default_truth() const {
  return kind == ModelKind::lgss ? LgssModel::default_truth() : SirModel::default_truth();
}

std::vector<std::string> ModelSpec::param_names() const {
  if (kind == ModelKind::lgss) return {"mu", "phi", "sigma"};
  return {"beta", "gamma"};
}

namespace {

std::vector<double> simulate_lgss(const ParamVector& truth, std::size_t length, const CrnStreams& streams) {
  const LgssTheta<0> theta{truth[kLgssMu], truth[kLgssPhi], truth[kLgssSigma]};
  std::vector<double> y(length);
  LgssScalar<0> x(0.0);
  for (std::size_t t = 0; t < length; ++t) {
    auto state_noise = streams.stream({.time = t, .purpose = Purpose::simulate_state});
    auto obs_noise = streams.stream({.time = t, .purpose = Purpose::simulate_obs});
    x = lgss_transition(theta, x, state_noise.normal());
    y[t] = x.v + truth[kLgssSigma] * obs_noise.normal();
  }
  return y;
}

std::vector<double> simulate_sir(const ParamVector& truth, std::size_t length, const SirOptions& options,
                                 const CrnStreams& streams) {
  const SirTheta<0> theta{truth[kSirBeta], truth[kSirGamma]};
  const SirModel model(options);
  auto state = model.initial_state(theta);
  std::vector<double> y(length);
  for (std::size_t t = 0; t < length; ++t) {
    auto state_noise = streams.stream({.time = t, .purpose = Purpose::simulate_state});
    const double noise[2] = {state_noise.normal(), state_noise.normal()};
    state = sir_step(theta, state, noise, options);
    auto obs_noise = streams.stream({.time = t, .purpose = Purpose::simulate_obs});
    std::poisson_distribution<long> counts(std::max(state[kSirI].v, options.min_infected));
    y[t] = static_cast<double>(counts(obs_noise));
  }
  return y;
}

}  // namespace

Dataset simulate(const ModelSpec& model, const ParamVector& truth, std::size_t length, std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("simulate: series length must be at least 1");
  if (truth.size() != model.param_dim()) throw DimensionMismatch("simulate: wrong parameter dimension");
  const CrnStreams streams(seed);
  Dataset data;
  data.model = model.kind;
  data.true_theta = truth;
  data.seed = seed;
  data.observations = model.kind == ModelKind::lgss ? simulate_lgss(truth, length, streams)
                                                    : simulate_sir(truth, length, model.sir, streams);
  return data;
}

}  // namespace hessmc
