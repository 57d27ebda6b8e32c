#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace smoothq {

/// SplitMix64 finalizer. Used to turn (seed, index) pairs into engine seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the stream for `index` derived from `base_seed`:
///   mix64(mix64(base_seed) ^ mix64(index + 0x9E3779B97F4A7C15)).
/// Streams for distinct indices are statistically independent and do not
/// depend on the order in which they are created.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

/// Seedable, splittable random stream.
///
/// Engine: std::mt19937_64. Derived variates use fixed algorithms so that a
/// seed pins every draw within one build:
///   - uniform()       : top 53 bits of one engine output, in [0, 1);
///   - uniform_index(n): rejection sampling on the engine output;
///   - normal()        : Marsaglia polar method, spare value cached.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  /// Stream for run `run_index` of an experiment seeded with `base_seed`.
  static RngStream for_run(std::uint64_t base_seed, std::uint64_t run_index);

  /// Independent child stream; does not advance this stream.
  RngStream split(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  double uniform();
  std::size_t uniform_index(std::size_t n);
  bool coin();
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace smoothq
