#include <hessmc/config.hpp>
#include <hessmc/dataset_io.hpp>
#include <hessmc/harness.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

using hessmc::ExperimentConfig;

/// Flags shared by every subcommand; each one overrides the config file when given.
struct Overrides {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> settings;

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        flag, [this, key](const std::string& value) { settings.emplace_back(key, value); }, help);
  }

  [[nodiscard]] ExperimentConfig resolve(std::optional<hessmc::ModelKind> fallback_model) const {
    ExperimentConfig config;
    if (!config_file.empty()) {
      config = hessmc::load_config(config_file);
    } else {
      hessmc::ModelKind model = fallback_model.value_or(hessmc::ModelKind::lgss);
      for (const auto& [key, value] : settings) {
        if (key == "model") model = hessmc::parse_model_kind(value);
      }
      config = hessmc::default_config(model);
    }
    for (const auto& [key, value] : settings) hessmc::apply_setting(config, key, value);
    return config;
  }
};

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_file, "Flat key = value config file")->check(CLI::ExistingFile);
  o.add(app, "--model", "model", "lgss or sir");
  o.add(app, "--t", "T", "Series length");
  o.add(app, "--out", "out_dir", "Output directory");
  o.add(app, "--workers", "workers", "Worker threads (default from HESSMC_WORKERS)");
}

void add_inference(CLI::App& app, Overrides& o) {
  o.add(app, "--master-seed", "master_seed", "Master seed for all random streams");
  o.add(app, "--nx", "N_x", "Particles per filter");
  o.add(app, "--samples", "N", "Sampler population size");
  o.add(app, "--iterations", "K", "Sampler iterations, counting initialisation");
  o.add(app, "--data-dir", "data_dir", "Read datasets from this directory");
  o.add(app, "--true-theta", "true_theta", "Comma-separated true parameters");
  o.add(app, "--record-timing", "record_timing", "false writes every wall_s as 0");
}

void print_rows(const std::vector<hessmc::CellResult>& rows, hessmc::ModelKind model, std::size_t dim) {
  std::cout << hessmc::results_header(dim);
  for (const auto& row : rows) std::cout << hessmc::results_row(model, row);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SMC2 with differentiable particle filters: data generation, runs and sweeps"};
  app.require_subcommand(1);

  Overrides gen;
  auto* generate = app.add_subcommand("generate", "Simulate one dataset per seed");
  add_common(*generate, gen);
  gen.add(*generate, "--seeds", "n_seeds", "Number of seeds");
  gen.add(*generate, "--first-seed", "first_seed", "First seed");
  gen.add(*generate, "--true-theta", "true_theta", "Comma-separated true parameters");

  Overrides run;
  double eps = 0.0;
  std::string proposal_name;
  auto* run_cmd = app.add_subcommand("run", "Run one proposal and step size over one or more seeds");
  add_common(*run_cmd, run);
  add_inference(*run_cmd, run);
  run_cmd->add_option("--proposal", proposal_name, "rw, fo or so")->required();
  run_cmd->add_option("--eps", eps, "Step size")->required()->check(CLI::PositiveNumber);
  run.add(*run_cmd, "--seed", "first_seed", "Dataset seed");
  run.add(*run_cmd, "--seeds", "n_seeds", "Number of consecutive seeds (default 1)");

  Overrides sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every (proposal, step size, seed) cell");
  add_common(*sweep_cmd, sweep);
  add_inference(*sweep_cmd, sweep);
  sweep.add(*sweep_cmd, "--seeds", "n_seeds", "Number of seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      const ExperimentConfig config = gen.resolve(std::nullopt);
      for (const auto& files : hessmc::cmd_generate(config, config.out_dir)) std::cout << files.csv.string() << '\n';
    } else if (run_cmd->parsed()) {
      Overrides single = run;
      // a run covers one seed unless --seeds says otherwise
      single.settings.insert(single.settings.begin(), {"n_seeds", "1"});
      const ExperimentConfig config = single.resolve(std::nullopt);
      const hessmc::ProposalConfig proposal{hessmc::parse_proposal_kind(proposal_name), eps};
      const auto rows = hessmc::cmd_run(config, proposal);
      print_rows(rows, config.model, config.model_spec().param_dim());
    } else if (sweep_cmd->parsed()) {
      if (sweep.config_file.empty()) throw hessmc::ConfigError("sweep requires --config");
      const ExperimentConfig config = sweep.resolve(std::nullopt);
      const auto out = hessmc::cmd_sweep(config);
      std::cout << hessmc::summary_json(out.aggregate);
      for (const auto& cell : out.aggregate.excluded) {
        std::cerr << "excluded cell: " << hessmc::to_string(cell.proposal) << " eps=" << cell.eps
                  << " (no successful seed)\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
