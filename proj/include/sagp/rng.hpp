#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sagp {

// All variate transforms live here rather than in <random> adapters: the
// standard specifies the mt19937_64 stream bit-for-bit but not the
// distributions, and reruns must be byte-identical across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    // Uniform on [0,1) with 53 random bits.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Unbiased integer in [0, bound); bound must be positive.
    std::uint64_t uniform_int(std::uint64_t bound);
    // Standard normal via Box-Muller (second value cached).
    double normal();
    double normal(double mean, double sd);
    // Gamma(shape, rate) by Marsaglia-Tsang squeeze; shape, rate > 0.
    double gamma(double shape, double rate);
    // InverseGamma(shape, scale): reciprocal of Gamma(shape, rate = scale).
    double inverse_gamma(double shape, double scale);

    // The first m elements of a Fisher-Yates shuffle of pool: a uniform
    // m-subset, in draw order. m must not exceed pool.size().
    std::vector<int> sample_without_replacement(std::vector<int> pool, std::size_t m);

    // Child stream for parallel work: deterministic function of this
    // generator's seed and the stream id, independent of draw position.
    Rng split(std::uint64_t stream_id) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool have_spare_ = false;
};

// SplitMix64 finalizer; used for seed derivation and content hashing.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sagp
