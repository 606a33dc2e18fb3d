#ifndef HESSMC_HARNESS_HPP
#define HESSMC_HARNESS_HPP

#include <hessmc/config.hpp>
#include <hessmc/dataset_io.hpp>
#include <hessmc/smc2.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hessmc {

/// One (proposal, step size, seed) run.
struct CellResult {
  ProposalKind proposal = ProposalKind::rw;
  double eps = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  Vector theta_hat;
  /// sqrt of the mean over parameters of the squared errors.
  double rmse = 0.0;
  Vector sq_err;
  double wall_s = 0.0;
  std::size_t moves = 0;
  std::size_t fallbacks = 0;
  std::size_t resamples = 0;
  /// Every sample's weight hit zero; the estimate uses the iterations before that.
  bool collapsed = false;
};

struct CellSummary {
  ProposalKind proposal = ProposalKind::rw;
  double eps = 0.0;
  double rmse_mean = 0.0;
  double rmse_q25 = 0.0;
  double rmse_q75 = 0.0;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double wall_total = 0.0;
  std::size_t moves = 0;
  std::size_t fallbacks = 0;
};

struct ProposalSummary {
  ProposalKind proposal = ProposalKind::rw;
  /// Step size whose mean RMSE is the median over the grid (lower middle for even
  /// counts, ties toward the smaller step).
  double eps_median = 0.0;
  Vector means;
  double rmse = 0.0;
  /// Median, quartiles and IQR of the per-step mean RMSEs.
  double rmse_median = 0.0;
  double rmse_q25 = 0.0;
  double rmse_q75 = 0.0;
  double rmse_iqr = 0.0;
  /// Relative runtime against RW at their median steps; empty when not measurable.
  std::optional<double> rr;
  double fallback_rate = 0.0;
  std::size_t failed_rows = 0;
  std::size_t collapsed_rows = 0;
  std::size_t excluded_cells = 0;
};

struct Aggregate {
  std::vector<CellSummary> cells;
  std::vector<ProposalSummary> proposals;
  /// Cells with no successful seed.
  std::vector<CellSummary> excluded;
};

struct SweepOutput {
  std::vector<CellResult> rows;
  Aggregate aggregate;
};

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Reads the dataset from config.data_dir when set, otherwise simulates it.
Dataset load_or_simulate(const ExperimentConfig& config, std::uint64_t seed);

/// Streams for one dataset seed; independent of proposal and step size.
CrnStreams cell_streams(const ExperimentConfig& config, std::uint64_t seed);

/// Runs the sampler for one cell and scores the recycled posterior mean.
CellResult run_cell(const ExperimentConfig& config, const Dataset& data, const ProposalConfig& proposal,
                    std::uint64_t seed, std::size_t sampler_workers = 1, const NegHessHook& perturb = {});

std::string results_header(std::size_t dim);
std::string results_row(ModelKind model, const CellResult& row);
std::string diagnostics_header();
std::string diagnostics_row(ModelKind model, const CellResult& row);

Aggregate aggregate_rmse(const std::vector<CellResult>& rows, const std::vector<ProposalKind>& proposals);

std::string rmse_by_eps_csv(const Aggregate& aggregate);
std::string summary_json(const Aggregate& aggregate);

/// Writes one dataset (CSV + sidecar) per configured seed into `dir`.
std::vector<DatasetFiles> cmd_generate(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Runs one proposal and step size over every configured seed; writes results.csv.
std::vector<CellResult> cmd_run(const ExperimentConfig& config, const ProposalConfig& proposal);

/// Runs every (proposal, step, seed) cell and writes results.csv, diagnostics.csv,
/// rmse_by_eps.csv and summary.json into config.out_dir.
SweepOutput cmd_sweep(const ExperimentConfig& config);

}  // namespace hessmc

#endif
