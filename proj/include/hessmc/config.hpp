#ifndef HESSMC_CONFIG_HPP
#define HESSMC_CONFIG_HPP

#include <hessmc/lgss.hpp>
#include <hessmc/model_spec.hpp>
#include <hessmc/pf.hpp>
#include <hessmc/smc2.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hessmc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::lgss;
  /// Empty means the model's default truth.
  ParamVector true_theta;
  std::size_t length = 500;
  std::size_t n_seeds = 50;
  std::uint64_t first_seed = 0;
  std::size_t particles = 500;
  std::size_t samples = 32;
  std::size_t iterations = 15;
  std::vector<ProposalKind> proposals{ProposalKind::rw, ProposalKind::fo, ProposalKind::so};
  std::map<ProposalKind, std::vector<double>> grids;
  std::optional<std::uint64_t> master_seed;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "results";
  /// Read datasets from here instead of simulating them.
  std::optional<std::filesystem::path> data_dir;
  /// When false every wall_s is written as 0 so result files are byte-reproducible.
  bool record_timing = true;
  double sir_noise_variance = 0.5;
  DerivativeCarry carry = DerivativeCarry::reset;
  LgssProposal lgss_proposal = LgssProposal::optimal;

  [[nodiscard]] ParamVector truth() const;
  [[nodiscard]] ModelSpec model_spec() const;
  [[nodiscard]] std::vector<std::uint64_t> seeds() const;
  [[nodiscard]] std::uint64_t require_master_seed() const;
};

/// Full-size defaults for the model: T = 500 (LGSS) or 36 (SIR), 20-point log grids.
ExperimentConfig default_config(ModelKind model);

/// n log-spaced points on [lo, hi].
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

/// "lo:hi:count" (log-spaced) or a comma-separated list.
std::vector<double> parse_grid(std::string_view text);

/// Applies one `key = value` setting; unknown keys are an error.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` file with `#` comments. `model` is applied first so that
/// model-dependent defaults never override explicit keys.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view text);

}  // namespace hessmc

#endif
