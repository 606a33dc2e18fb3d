#include <hessmc/harness.hpp>

#include <hessmc/parallel.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <tuple>

namespace hessmc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

/// Writes rows to results.csv and diagnostics.csv in cell-index order as cells complete.
class OrderedSink {
 public:
  OrderedSink(const std::filesystem::path& dir, ModelKind model, std::size_t dim, std::size_t cells)
      : model_(model), pending_(cells), results_(open_output(dir / "results.csv")),
        diagnostics_(open_output(dir / "diagnostics.csv")) {
    results_ << results_header(dim);
    diagnostics_ << diagnostics_header();
    results_.flush();
    diagnostics_.flush();
  }

  void submit(std::size_t index, const CellResult& row) {
    const std::lock_guard lock(mutex_);
    pending_[index] = row;
    while (next_ < pending_.size() && pending_[next_]) {
      results_ << results_row(model_, *pending_[next_]);
      diagnostics_ << diagnostics_row(model_, *pending_[next_]);
      ++next_;
    }
    results_.flush();
    diagnostics_.flush();
  }

 private:
  ModelKind model_;
  std::mutex mutex_;
  std::vector<std::optional<CellResult>> pending_;
  std::size_t next_ = 0;
  std::ofstream results_;
  std::ofstream diagnostics_;
};

std::vector<Dataset> prepare_datasets(const ExperimentConfig& config) {
  const auto seeds = config.seeds();
  std::vector<Dataset> data(seeds.size());
  parallel_for(seeds.size(), config.workers, [&](std::size_t i) { data[i] = load_or_simulate(config, seeds[i]); });
  return data;
}

const std::vector<double>& grid_for(const ExperimentConfig& config, ProposalKind kind) {
  const auto it = config.grids.find(kind);
  if (it == config.grids.end() || it->second.empty()) {
    throw ConfigError("no step-size grid for proposal " + std::string(to_string(kind)));
  }
  return it->second;
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Dataset load_or_simulate(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.data_dir) {
    Dataset data = read_dataset(dataset_paths(*config.data_dir, config.model, seed).csv);
    if (data.model != config.model) throw ConfigError("dataset for seed " + std::to_string(seed) + " is not " +
                                                      std::string(to_string(config.model)));
    return data;
  }
  return simulate(config.model_spec(), config.truth(), config.length, seed);
}

CrnStreams cell_streams(const ExperimentConfig& config, std::uint64_t seed) {
  return CrnStreams(config.require_master_seed()).derive(seed);
}

CellResult run_cell(const ExperimentConfig& config, const Dataset& data, const ProposalConfig& proposal,
                    std::uint64_t seed, std::size_t sampler_workers, const NegHessHook& perturb) {
  const ModelSpec spec = config.model_spec();
  const CrnStreams streams = cell_streams(config, seed);
  PfConfig pf;
  pf.particles = config.particles;
  pf.carry = config.carry;
  const Target target = Target::particle_filter(spec, std::make_shared<const Dataset>(data), streams, pf);

  SamplerOptions options;
  options.samples = config.samples;
  options.iterations = config.iterations;
  options.proposal = proposal;
  options.workers = sampler_workers;
  options.perturb_neg_hess = perturb;

  CellResult row;
  row.proposal = proposal.kind;
  row.eps = proposal.epsilon;
  row.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  const SamplerPopulation population = run_smc2(target, streams, options);
  Vector estimate;
  if (!population.snapshots.empty()) estimate = recycled_mean(population);
  const auto stop = std::chrono::steady_clock::now();

  row.wall_s = config.record_timing ? std::chrono::duration<double>(stop - start).count() : 0.0;
  row.moves = population.moves;
  row.fallbacks = population.fallbacks;
  row.resamples = population.resamples;
  row.collapsed = population.collapsed;

  const ParamVector truth = data.true_theta;
  const std::size_t d = truth.size();
  row.ok = estimate.size() == d && std::all_of(estimate.begin(), estimate.end(), [](double v) {
             return std::isfinite(v);
           });
  row.theta_hat = row.ok ? estimate : Vector(d, kNaN);
  row.sq_err = Vector(d, kNaN);
  row.rmse = kNaN;
  if (row.ok) {
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = row.theta_hat[i] - truth[i];
      row.sq_err[i] = e * e;
      total += row.sq_err[i];
    }
    row.rmse = std::sqrt(total / static_cast<double>(d));
  }
  return row;
}

std::string results_header(std::size_t dim) {
  std::string out = "model,proposal,eps,seed,status";
  for (std::size_t i = 1; i <= dim; ++i) out += ",theta_hat_" + std::to_string(i);
  out += ",rmse";
  for (std::size_t i = 1; i <= dim; ++i) out += ",sq_err_" + std::to_string(i);
  out += ",wall_s\n";
  return out;
}

std::string results_row(ModelKind model, const CellResult& row) {
  std::string out;
  out += to_string(model);
  out += ',';
  out += to_string(row.proposal);
  out += ',' + format_double(row.eps) + ',' + std::to_string(row.seed) + ',';
  out += row.ok ? "ok" : "failed";
  for (double v : row.theta_hat) out += ',' + format_double(v);
  out += ',' + format_double(row.rmse);
  for (double v : row.sq_err) out += ',' + format_double(v);
  out += ',' + format_double(row.wall_s) + '\n';
  return out;
}

std::string diagnostics_header() { return "model,proposal,eps,seed,status,moves,fallbacks,fallback_rate,resamples,collapsed\n"; }

std::string diagnostics_row(ModelKind model, const CellResult& row) {
  const double rate = row.moves == 0 ? 0.0 : static_cast<double>(row.fallbacks) / static_cast<double>(row.moves);
  std::string out;
  out += to_string(model);
  out += ',';
  out += to_string(row.proposal);
  out += ',' + format_double(row.eps) + ',' + std::to_string(row.seed) + ',';
  out += row.ok ? "ok" : "failed";
  out += ',' + std::to_string(row.moves) + ',' + std::to_string(row.fallbacks) + ',' + format_double(rate) + ',' +
         std::to_string(row.resamples) + ',' + (row.collapsed ? "1" : "0") + '\n';
  return out;
}

Aggregate aggregate_rmse(const std::vector<CellResult>& rows, const std::vector<ProposalKind>& proposals) {
  Aggregate out;
  for (ProposalKind kind : proposals) {
    // distinct step sizes in first-appearance order
    std::vector<double> steps;
    for (const auto& r : rows) {
      if (r.proposal == kind && std::find(steps.begin(), steps.end(), r.eps) == steps.end()) steps.push_back(r.eps);
    }

    std::vector<CellSummary> included;
    ProposalSummary summary;
    summary.proposal = kind;
    std::size_t moves = 0;
    std::size_t fallbacks = 0;
    for (double eps : steps) {
      CellSummary cell;
      cell.proposal = kind;
      cell.eps = eps;
      std::vector<double> rmses;
      for (const auto& r : rows) {
        if (r.proposal != kind || r.eps != eps) continue;
        if (r.collapsed) ++summary.collapsed_rows;
        cell.moves += r.moves;
        cell.fallbacks += r.fallbacks;
        if (r.ok) {
          rmses.push_back(r.rmse);
          cell.wall_total += r.wall_s;
        } else {
          ++cell.n_failed;
        }
      }
      moves += cell.moves;
      fallbacks += cell.fallbacks;
      summary.failed_rows += cell.n_failed;
      cell.n_ok = rmses.size();
      if (rmses.empty()) {
        cell.rmse_mean = cell.rmse_q25 = cell.rmse_q75 = kNaN;
        out.excluded.push_back(cell);
        ++summary.excluded_cells;
      } else {
        double total = 0.0;
        for (double v : rmses) total += v;
        cell.rmse_mean = total / static_cast<double>(rmses.size());
        cell.rmse_q25 = quantile(rmses, 0.25);
        cell.rmse_q75 = quantile(rmses, 0.75);
        included.push_back(cell);
      }
      out.cells.push_back(cell);
    }
    summary.fallback_rate = moves == 0 ? 0.0 : static_cast<double>(fallbacks) / static_cast<double>(moves);
    if (included.empty()) {
      summary.eps_median = summary.rmse = summary.rmse_median = kNaN;
      summary.rmse_q25 = summary.rmse_q75 = summary.rmse_iqr = kNaN;
      out.proposals.push_back(summary);
      continue;
    }

    std::vector<double> means;
    for (const auto& c : included) means.push_back(c.rmse_mean);
    summary.rmse_median = quantile(means, 0.5);
    summary.rmse_q25 = quantile(means, 0.25);
    summary.rmse_q75 = quantile(means, 0.75);
    summary.rmse_iqr = summary.rmse_q75 - summary.rmse_q25;

    auto ordered = included;
    std::sort(ordered.begin(), ordered.end(), [](const CellSummary& a, const CellSummary& b) {
      return std::tie(a.rmse_mean, a.eps) < std::tie(b.rmse_mean, b.eps);
    });
    // lower middle for even counts; among equal RMSEs the smallest step wins
    const double median_value = ordered[(ordered.size() - 1) / 2].rmse_mean;
    const CellSummary& chosen = *std::find_if(ordered.begin(), ordered.end(),
                                              [&](const CellSummary& c) { return c.rmse_mean == median_value; });
    summary.eps_median = chosen.eps;
    summary.rmse = chosen.rmse_mean;

    std::size_t count = 0;
    for (const auto& r : rows) {
      if (r.proposal != kind || r.eps != chosen.eps || !r.ok) continue;
      if (count == 0) summary.means = Vector(r.theta_hat.size(), 0.0);
      summary.means += r.theta_hat;
      ++count;
    }
    summary.means *= 1.0 / static_cast<double>(count);
    out.proposals.push_back(summary);
  }

  // relative runtime against RW at the respective median steps
  auto wall_at_median = [&](const ProposalSummary& s) {
    for (const auto& c : out.cells) {
      if (c.proposal == s.proposal && c.eps == s.eps_median) return c.wall_total;
    }
    return kNaN;
  };
  const ProposalSummary* rw = nullptr;
  for (const auto& s : out.proposals) {
    if (s.proposal == ProposalKind::rw && std::isfinite(s.eps_median)) rw = &s;
  }
  for (auto& s : out.proposals) {
    if (!std::isfinite(s.eps_median)) continue;
    if (s.proposal == ProposalKind::rw) {
      s.rr = 1.0;
      continue;
    }
    if (rw == nullptr) continue;
    const double base = wall_at_median(*rw);
    if (base > 0.0) s.rr = wall_at_median(s) / base;
  }
  return out;
}

std::string rmse_by_eps_csv(const Aggregate& aggregate) {
  std::string out = "proposal,eps,rmse_mean,rmse_q25,rmse_q75\n";
  for (const auto& c : aggregate.cells) {
    out += std::string(to_string(c.proposal)) + ',' + format_double(c.eps) + ',' + format_double(c.rmse_mean) + ',' +
           format_double(c.rmse_q25) + ',' + format_double(c.rmse_q75) + '\n';
  }
  return out;
}

std::string summary_json(const Aggregate& aggregate) {
  auto number = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : aggregate.proposals) {
    nlohmann::ordered_json j;
    j["proposal"] = std::string(to_string(s.proposal));
    j["eps_median"] = number(s.eps_median);
    j["means"] = nlohmann::ordered_json::array();
    for (double v : s.means) j["means"].push_back(number(v));
    j["rmse"] = number(s.rmse);
    j["rr"] = s.rr ? number(*s.rr) : nlohmann::ordered_json(nullptr);
    j["rmse_median"] = number(s.rmse_median);
    j["rmse_q25"] = number(s.rmse_q25);
    j["rmse_q75"] = number(s.rmse_q75);
    j["rmse_iqr"] = number(s.rmse_iqr);
    j["fallback_rate"] = s.fallback_rate;
    j["failed_rows"] = s.failed_rows;
    j["collapsed_rows"] = s.collapsed_rows;
    j["excluded_cells"] = s.excluded_cells;
    rows.push_back(std::move(j));
  }
  return rows.dump(2) + "\n";
}

std::vector<DatasetFiles> cmd_generate(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const auto seeds = config.seeds();
  std::vector<DatasetFiles> files(seeds.size());
  parallel_for(seeds.size(), config.workers, [&](std::size_t i) {
    files[i] = write_dataset(simulate(config.model_spec(), config.truth(), config.length, seeds[i]), dir);
  });
  return files;
}

std::vector<CellResult> cmd_run(const ExperimentConfig& config, const ProposalConfig& proposal) {
  static_cast<void>(config.require_master_seed());
  ensure_dir(config.out_dir);
  const auto seeds = config.seeds();
  const auto data = prepare_datasets(config);
  OrderedSink sink(config.out_dir, config.model, config.model_spec().param_dim(), seeds.size());

  std::vector<CellResult> rows(seeds.size());
  // one seed: spread the sampler's per-sample work instead
  const std::size_t inner = seeds.size() == 1 ? config.workers : 1;
  parallel_for(seeds.size(), config.workers, [&](std::size_t i) {
    rows[i] = run_cell(config, data[i], proposal, seeds[i], inner);
    sink.submit(i, rows[i]);
  });
  return rows;
}

SweepOutput cmd_sweep(const ExperimentConfig& config) {
  static_cast<void>(config.require_master_seed());
  ensure_dir(config.out_dir);
  const auto seeds = config.seeds();
  const auto data = prepare_datasets(config);

  struct Job {
    ProposalConfig proposal;
    std::size_t seed_index;
  };
  std::vector<Job> jobs;
  for (ProposalKind kind : config.proposals) {
    for (double eps : grid_for(config, kind)) {
      for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({{kind, eps}, s});
    }
  }

  OrderedSink sink(config.out_dir, config.model, config.model_spec().param_dim(), jobs.size());
  SweepOutput out;
  out.rows.resize(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    out.rows[i] = run_cell(config, data[job.seed_index], job.proposal, seeds[job.seed_index]);
    sink.submit(i, out.rows[i]);
  });

  out.aggregate = aggregate_rmse(out.rows, config.proposals);
  write_text(config.out_dir / "rmse_by_eps.csv", rmse_by_eps_csv(out.aggregate));
  write_text(config.out_dir / "summary.json", summary_json(out.aggregate));
  return out;
}

}  // namespace hessmc
