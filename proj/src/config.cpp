#include <hessmc/config.hpp>

#include <hessmc/parallel.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace hessmc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

double to_double(std::string_view key, std::string_view text) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + std::string(key) + "': '" + std::string(text) + "'");
  }
}

std::uint64_t to_count(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid integer for '" + std::string(key) + "': '" + std::string(text) + "'");
  }
  return v;
}

std::size_t to_positive(std::string_view key, std::string_view text) {
  const auto v = to_count(key, text);
  if (v == 0) throw ConfigError("'" + std::string(key) + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for '" + std::string(key) + "': '" + std::string(text) + "'");
}

}  // namespace

ParamVector ExperimentConfig::truth() const { return true_theta.empty() ? model_spec().default_truth() : true_theta; }

ModelSpec ExperimentConfig::model_spec() const {
  ModelSpec spec;
  spec.kind = model;
  spec.lgss.proposal = lgss_proposal;
  spec.sir.noise_variance = sir_noise_variance;
  return spec;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out(n_seeds);
  for (std::size_t i = 0; i < n_seeds; ++i) out[i] = first_seed + i;
  return out;
}

std::uint64_t ExperimentConfig::require_master_seed() const {
  if (!master_seed) throw ConfigError("master_seed must be set explicitly");
  return *master_seed;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw ConfigError("log grid needs 0 < lo <= hi and count >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("log grid must be lo:hi:count, got '" + std::string(text) + "'");
    out = log_spaced(to_double("grid", parts[0]), to_double("grid", parts[1]),
                     to_positive("grid", parts[2]));
  } else {
    for (auto part : split(text, ',')) out.push_back(to_double("grid", part));
  }
  for (double eps : out) {
    if (!(eps > 0.0)) throw ConfigError("step sizes must be positive");
  }
  if (out.empty()) throw ConfigError("empty step-size grid");
  return out;
}

ExperimentConfig default_config(ModelKind model) {
  ExperimentConfig config;
  config.model = model;
  config.length = model == ModelKind::lgss ? 500 : 36;
  config.grids[ProposalKind::rw] = log_spaced(0.05, 1.5, 20);
  config.grids[ProposalKind::fo] = log_spaced(0.005, 0.1, 20);
  config.grids[ProposalKind::so] = log_spaced(0.25, 3.0, 20);
  config.workers = default_worker_count();
  return config;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "model") {
    try {
      config.model = parse_model_kind(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "true_theta") {
    std::vector<double> values;
    for (auto part : split(value, ',')) values.push_back(to_double(key, part));
    config.true_theta = Vector(std::span<const double>(values));
  } else if (key == "T" || key == "t" || key == "length") {
    config.length = to_positive(key, value);
  } else if (key == "n_seeds" || key == "seeds") {
    config.n_seeds = to_positive(key, value);
  } else if (key == "first_seed") {
    config.first_seed = to_count(key, value);
  } else if (key == "N_x" || key == "nx" || key == "particles") {
    config.particles = to_positive(key, value);
    if (config.particles < 2) throw ConfigError("particle filters need at least two particles");
  } else if (key == "N" || key == "samples") {
    config.samples = to_positive(key, value);
    if (config.samples < 2) throw ConfigError("the sampler needs at least two samples");
  } else if (key == "K" || key == "iterations") {
    config.iterations = to_positive(key, value);
  } else if (key == "proposals") {
    config.proposals.clear();
    try {
      for (auto part : split(value, ',')) config.proposals.push_back(parse_proposal_kind(part));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "grid_rw") {
    config.grids[ProposalKind::rw] = parse_grid(value);
  } else if (key == "grid_fo") {
    config.grids[ProposalKind::fo] = parse_grid(value);
  } else if (key == "grid_so") {
    config.grids[ProposalKind::so] = parse_grid(value);
  } else if (key == "master_seed") {
    config.master_seed = to_count(key, value);
  } else if (key == "workers") {
    config.workers = to_positive(key, value);
  } else if (key == "out" || key == "out_dir") {
    config.out_dir = std::string(value);
  } else if (key == "data_dir") {
    config.data_dir = std::string(value);
  } else if (key == "record_timing") {
    config.record_timing = to_bool(key, value);
  } else if (key == "sir_noise_variance") {
    config.sir_noise_variance = to_double(key, value);
    if (!(config.sir_noise_variance >= 0.0)) throw ConfigError("sir_noise_variance must be non-negative");
  } else if (key == "derivative_carry") {
    if (value == "reset") {
      config.carry = DerivativeCarry::reset;
    } else if (value == "recentre") {
      config.carry = DerivativeCarry::recentre;
    } else {
      throw ConfigError("derivative_carry must be reset or recentre");
    }
  } else if (key == "lgss_proposal") {
    if (value == "optimal") {
      config.lgss_proposal = LgssProposal::optimal;
    } else if (value == "bootstrap") {
      config.lgss_proposal = LgssProposal::bootstrap;
    } else {
      throw ConfigError("lgss_proposal must be optimal or bootstrap");
    }
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    }
    entries.emplace_back(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
  }

  ModelKind model = ModelKind::lgss;
  for (const auto& [key, value] : entries) {
    if (key == "model") {
      ExperimentConfig probe;
      apply_setting(probe, key, value);
      model = probe.model;
    }
  }
  ExperimentConfig config = default_config(model);
  for (const auto& [key, value] : entries) apply_setting(config, key, value);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace hessmc
