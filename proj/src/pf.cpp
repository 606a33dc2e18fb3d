#include <hessmc/pf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hessmc {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

NormalizedWeights normalize_weights(std::span<const double> log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (lw > max_lw) max_lw = lw;
  }
  if (!std::isfinite(max_lw)) throw DegenerateCloud("no particle has a finite log-weight");

  NormalizedWeights out;
  out.weights.resize(log_weights.size());
  for (std::size_t j = 0; j < log_weights.size(); ++j) {
    // NaN weights count as zero
    const double lw = log_weights[j];
    out.weights[j] = std::isnan(lw) ? 0.0 : std::exp(lw - max_lw);
  }
  const double total = pairwise_sum(out.weights);
  for (double& w : out.weights) w /= total;
  out.log_mean_weight = max_lw + std::log(total) - std::log(static_cast<double>(log_weights.size()));
  return out;
}

double ess(std::span<const double> normalized) {
  double sum_sq = 0.0;
  for (double w : normalized) sum_sq += w * w;
  return 1.0 / sum_sq;
}

std::vector<std::size_t> systematic_resample(std::span<const double> normalized, double u) {
  const std::size_t n = normalized.size();
  std::vector<std::size_t> ancestors(n);
  if (n == 0) return ancestors;

  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (normalized[i] > 0.0) last_positive = i;
  }

  const double step = 1.0 / static_cast<double>(n);
  std::size_t parent = 0;
  double cumulative = normalized[0];
  for (std::size_t j = 0; j < n; ++j) {
    const double position = (u + static_cast<double>(j)) * step;
    while (position >= cumulative && parent < last_positive) {
      ++parent;
      cumulative += normalized[parent];
    }
    ancestors[j] = parent;
  }
  return ancestors;
}

LogLikEstimate run_pf(const ModelSpec& model, const ParamVector& theta, const Dataset& data,
                      const CrnStreams& streams, std::uint64_t sample_id, std::uint64_t iteration,
                      const PfConfig& config) {
  if (model.kind == ModelKind::lgss) {
    return run_pf(LgssModel(model.lgss), theta, data, streams, sample_id, iteration, config);
  }
  return run_pf(SirModel(model.sir), theta, data, streams, sample_id, iteration, config);
}

}  // namespace hessmc
