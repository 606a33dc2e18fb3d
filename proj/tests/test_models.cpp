#include <hessmc/dataset_io.hpp>
#include <hessmc/lgss.hpp>
#include <hessmc/model_spec.hpp>
#include <hessmc/rng.hpp>
#include <hessmc/sir.hpp>

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hessmc;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const char* root = std::getenv("HESSMC_TEST_TMP");
  auto dir = std::filesystem::path(root != nullptr ? root : "/tmp/hessmc_tests") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Dense oracle: y = A z + sigma e with A[t][k] = phi mu^(t-k) for k <= t.
double dense_lgss_loglik(const ParamVector& theta, const std::vector<double>& y) {
  const std::size_t n = y.size();
  SquareMatrix a(n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k <= t; ++k) a(t, k) = theta[1] * std::pow(theta[0], static_cast<double>(t - k));
  SquareMatrix cov(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? theta[2] * theta[2] : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * a(j, k);
      cov(i, j) = s;
    }
  return mvn_logpdf(Vector(std::span<const double>(y)), Vector(n, 0.0), SymMatrix(cov));
}

}  // namespace

TEST_CASE("random streams are pure functions of their key") {
  const CrnStreams streams(42);
  auto a = streams.stream({.sample = 3, .iteration = 1, .time = 7, .particle = 2, .purpose = Purpose::pf_state});
  auto b = streams.stream({.sample = 3, .iteration = 1, .time = 7, .particle = 2, .purpose = Purpose::pf_state});
  for (int i = 0; i < 5; ++i) CHECK(a.normal() == b.normal());
  auto c = streams.stream({.sample = 3, .iteration = 1, .time = 7, .particle = 2, .purpose = Purpose::momentum});
  auto d = streams.stream({.sample = 3, .iteration = 1, .time = 7, .particle = 3, .purpose = Purpose::pf_state});
  auto e = CrnStreams(43).stream({.sample = 3, .iteration = 1, .time = 7, .particle = 2, .purpose = Purpose::pf_state});
  const double first = streams.stream({.sample = 3, .iteration = 1, .time = 7, .particle = 2}).uniform();
  CHECK(c.uniform() != first);
  CHECK(d.uniform() != first);
  CHECK(e.uniform() != first);
  CHECK(streams.derive(1).master_seed() != streams.derive(2).master_seed());
}

TEST_CASE("normal draws have unit moments") {
  RandomStream rng(9);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("prior box") {
  const PriorSpec prior = LgssModel::default_prior();
  CHECK(prior.contains(ParamVector{0.5, 1.0, 1.0}));
  CHECK_FALSE(prior.contains(ParamVector{1.5, 1.0, 1.0}));
  CHECK_FALSE(prior.contains(ParamVector{0.5, -0.1, 1.0}));
  CHECK(prior_logpdf(prior, ParamVector{0.5, 1.0, 1.0}) == doctest::Approx(-std::log(4.0)));
  CHECK(std::isinf(prior_logpdf(prior, ParamVector{0.5, 3.0, 1.0})));
  RandomStream rng(1);
  for (int i = 0; i < 100; ++i) CHECK(prior.contains(sample_prior(prior, rng)));
}

TEST_CASE("SIR step from the initial state without noise") {
  const SirOptions options;
  const SirTheta<2> theta{SirScalar<2>::variable(0.6, 0), SirScalar<2>::variable(0.3, 1)};
  const SirState<2> start{SirScalar<2>(762.0), SirScalar<2>(1.0)};
  const double noise[2] = {0.0, 0.0};
  const auto next = sir_step(theta, start, noise, options);
  CHECK(next[kSirS].v == doctest::Approx(762.0 - 0.6 * 762.0));
  CHECK(next[kSirI].v == doctest::Approx(1.0 + 0.6 * 762.0 - 0.3));
  CHECK(next[kSirS].grad(kSirBeta) == doctest::Approx(-762.0));
  CHECK(next[kSirI].grad(kSirBeta) == doctest::Approx(762.0));
  CHECK(next[kSirI].grad(kSirGamma) == doctest::Approx(-1.0));
  const double recovered = sir_recovered(next[kSirS].v, next[kSirI].v, options);
  CHECK(next[kSirS].v + next[kSirI].v + recovered == doctest::Approx(options.population).epsilon(1e-15));
}

TEST_CASE("SIR clamps freeze derivatives and mark the trace") {
  const SirOptions options;
  const SirTheta<2> theta{SirScalar<2>::variable(0.9, 0), SirScalar<2>::variable(0.1, 1)};
  SirState<2> state{SirScalar<2>(500.0), SirScalar<2>(300.0)};
  const double noise[2] = {0.0, 0.0};
  BranchTrace trace;
  const auto before = trace.hash;
  state = sir_step(theta, state, noise, options, &trace);
  CHECK(state[kSirS].v == 0.0);
  CHECK(state[kSirS].grad(kSirBeta) == 0.0);
  CHECK(trace.hash != before);

  const SirTheta<2> decay{SirScalar<2>::variable(0.0, 0), SirScalar<2>::variable(1.0, 1)};
  SirState<2> few{SirScalar<2>(10.0), SirScalar<2>(0.5)};
  const double push[2] = {0.0, -3.0};
  few = sir_step(decay, few, push, options);
  CHECK(few[kSirI].v == options.min_infected);
  CHECK(few[kSirI].grad(kSirGamma) == 0.0);
}

TEST_CASE("LGSS optimal weight equals the predictive density of y") {
  const LgssTheta<0> theta{0.7, 1.2, 0.8};
  const LgssScalar<0> x_prev(0.4);
  const double y = 1.1;
  const double var = 1.2 * 1.2 + 0.8 * 0.8;
  const double expected = -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (y - 0.28) * (y - 0.28) / var;
  CHECK(lgss_weight_logdensity(theta, x_prev, y).v == doctest::Approx(expected).epsilon(1e-14));
  const double rho2 = 1.0 / (1.0 / 1.44 + 1.0 / 0.64);
  const double mean = rho2 * (y / 0.64 + 0.28 / 1.44);
  CHECK(lgss_optimal_proposal(theta, x_prev, y, 0.0).v == doctest::Approx(mean).epsilon(1e-14));
  CHECK(lgss_optimal_proposal(theta, x_prev, y, 1.0).v == doctest::Approx(mean + std::sqrt(rho2)).epsilon(1e-14));
}

TEST_CASE("Kalman log-likelihood matches the dense Gaussian density") {
  ModelSpec spec;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Dataset data = simulate(spec, ParamVector{0.75, 1.0, 1.0}, 8, seed);
    for (const ParamVector& theta : {ParamVector{0.75, 1.0, 1.0}, ParamVector{0.2, 0.5, 1.7}}) {
      CHECK(kalman_loglik(theta, data) == doctest::Approx(dense_lgss_loglik(theta, data.observations)).epsilon(1e-12));
    }
  }
}

TEST_CASE("simulation is deterministic and shaped by the model") {
  ModelSpec lgss;
  const Dataset a = simulate(lgss, lgss.default_truth(), 500, 0);
  const Dataset b = simulate(lgss, lgss.default_truth(), 500, 0);
  const Dataset c = simulate(lgss, lgss.default_truth(), 500, 1);
  CHECK(a.observations == b.observations);
  CHECK(a.observations != c.observations);
  CHECK(a.length() == 500);
  CHECK(lgss.default_truth() == ParamVector{0.75, 1.0, 1.0});

  ModelSpec sir;
  sir.kind = ModelKind::sir;
  const Dataset s = simulate(sir, sir.default_truth(), 36, 0);
  CHECK(s.length() == 36);
  for (double y : s.observations) {
    CHECK(y >= 0.0);
    CHECK(y == std::floor(y));
  }
  // without transmission the infected compartment only hovers around the noise level
  const Dataset quiet = simulate(sir, ParamVector{0.0, 0.3}, 60, 3);
  double late = 0.0;
  for (std::size_t t = 30; t < 60; ++t) late += quiet.observations[t];
  CHECK(late / 30.0 < 3.0);
}

TEST_CASE("dataset files round-trip byte-identically") {
  const auto dir = scratch("models_io");
  ModelSpec spec;
  const Dataset data = simulate(spec, spec.default_truth(), 50, 4);
  const DatasetFiles files = write_dataset(data, dir);
  CHECK(files.csv.filename() == "lgss_seed4.csv");
  const std::string first = slurp(files.csv);
  const std::string sidecar = slurp(files.json);
  CHECK(first.rfind("t,y\n1,", 0) == 0);
  write_dataset(data, dir);
  CHECK(slurp(files.csv) == first);
  CHECK(slurp(files.json) == sidecar);

  const Dataset back = read_dataset(files.csv);
  CHECK(back.observations == data.observations);
  CHECK(back.true_theta == data.true_theta);
  CHECK(back.seed == 4);
  CHECK(back.model == ModelKind::lgss);

  CHECK_THROWS_AS(read_dataset(dir / "missing.csv"), IoError);
}
