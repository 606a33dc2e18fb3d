#include <hessmc/lgss.hpp>

#include <cmath>
#include <numbers>

namespace hessmc {

double kalman_loglik(const ParamVector& theta, const Dataset& data) {
  const double mu = theta[kLgssMu];
  const double q = theta[kLgssPhi] * theta[kLgssPhi];
  const double r = theta[kLgssSigma] * theta[kLgssSigma];
  double mean = 0.0;
  double var = 0.0;
  double loglik = 0.0;
  for (double y : data.observations) {
    const double pred_mean = mu * mean;
    const double pred_var = mu * mu * var + q;
    const double innovation_var = pred_var + r;
    const double innovation = y - pred_mean;
    loglik -= 0.5 * (std::log(2.0 * std::numbers::pi * innovation_var) + innovation * innovation / innovation_var);
    const double gain = pred_var / innovation_var;
    mean = pred_mean + gain * innovation;
    var = (1.0 - gain) * pred_var;
  }
  return loglik;
}

}  // namespace hessmc
