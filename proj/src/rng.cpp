#include <hessmc/rng.hpp>

#include <cmath>
#include <numbers>

namespace hessmc {

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u lies in (0, 1], keeping the log finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

RandomStream CrnStreams::stream(const StreamKey& key) const {
  std::uint64_t h = mix64(master_seed_ ^ 0x5bd1e9955bd1e995ULL);
  h = mix64(h ^ key.sample);
  h = mix64(h ^ key.iteration);
  h = mix64(h ^ key.time);
  h = mix64(h ^ key.particle);
  h = mix64(h ^ static_cast<std::uint64_t>(key.purpose));
  return RandomStream(h);
}

CrnStreams CrnStreams::derive(std::uint64_t salt) const {
  return CrnStreams(mix64(mix64(master_seed_) ^ mix64(salt + 0x632be59bd9b4e019ULL)));
}

}  // namespace hessmc
