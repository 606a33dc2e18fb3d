#ifndef HESSMC_RNG_HPP
#define HESSMC_RNG_HPP

#include <cstdint>
#include <limits>

/**
 * \file
 * \brief Common random number streams.
 *
 * Every draw in the library comes from a stream addressed by a key
 * (sample, iteration, time, particle, purpose). A stream is a pure function
 * of the master seed and its key, so results never depend on evaluation order
 * or on how work is spread across threads, and a particle filter re-run at a
 * perturbed parameter sees exactly the same noise.
 */

namespace hessmc {

enum class Purpose : std::uint32_t {
  pf_state = 1,
  pf_resample = 2,
  prior_draw = 3,
  momentum = 4,
  sampler_resample = 5,
  simulate_state = 6,
  simulate_obs = 7,
};

struct StreamKey {
  std::uint64_t sample = 0;
  std::uint64_t iteration = 0;
  std::uint64_t time = 0;
  std::uint64_t particle = 0;
  Purpose purpose = Purpose::pf_state;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Sequential draws from one keyed substream. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; draws come in pairs.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

class CrnStreams {
 public:
  explicit CrnStreams(std::uint64_t master_seed) : master_seed_(master_seed) {}

  [[nodiscard]] std::uint64_t master_seed() const { return master_seed_; }
  [[nodiscard]] RandomStream stream(const StreamKey& key) const;

  /// Streams for an independent experiment derived from this one (e.g. one dataset seed).
  [[nodiscard]] CrnStreams derive(std::uint64_t salt) const;

 private:
  std::uint64_t master_seed_;
};

}  // namespace hessmc

#endif
