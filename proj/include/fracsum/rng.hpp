#pragma once

#include <cstdint>
#include <random>

namespace fracsum {

/// A reproducible random stream keyed by (seed, stream_id). Two streams with
/// the same key produce identical variate sequences under the same call order.
/// Not thread-safe; give each task its own stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  std::uint64_t poisson(double mean);
  std::uint64_t binomial(std::uint64_t trials, double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Mixes two keys into one stream id (splitmix64 finalizer).
std::uint64_t stream_hash(std::uint64_t a, std::uint64_t b);

}  // namespace fracsum
