#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the code under test except for plain data accessors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smoothq/mdp.hpp"

namespace smoothq::testing {

/// Softmax in long double, straight from the definition (no max shift).
inline std::vector<long double> softmax_ld(std::span<const double> row, long double beta) {
  std::vector<long double> p(row.size());
  long double z = 0.0L;
  for (std::size_t i = 0; i < row.size(); ++i) {
    p[i] = std::exp(beta * static_cast<long double>(row[i]));
    z += p[i];
  }
  for (auto& v : p) {
    v /= z;
  }
  return p;
}

inline long double dot_ld(std::span<const double> a, std::span<const double> b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
  }
  return s;
}

/// Brute-force Σ_{t=lo..hi} f(t) in long double.
template <class F>
long double sum_ld(std::uint64_t lo, std::uint64_t hi, F f) {
  long double s = 0.0L;
  for (std::uint64_t t = lo; t <= hi; ++t) {
    s += static_cast<long double>(f(t));
  }
  return s;
}

/// Standard error of a binomial proportion.
inline double binomial_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

/// Exact expectation of a one-step target r + γ·v(s'), summed over the
/// categorical row: Σ_{s'} p(s'|s,a)·[r̄ + γ·v(s')], v(terminal) = 0.
template <class ValueOfNext>
long double expected_target(const TabularMdp& mdp, std::size_t s, std::size_t a,
                            ValueOfNext value_of_next) {
  long double e = 0.0L;
  for (const auto& o : mdp.outcomes(s, a)) {
    const long double v = mdp.is_terminal(o.next_state) ? 0.0L : value_of_next(o.next_state);
    e += o.probability * (o.reward.mean + mdp.discount() * v);
  }
  return e;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* base = std::getenv("SMOOTHQ_TEST_TMP");
  auto dir = std::filesystem::path(base ? base : std::filesystem::temp_directory_path().string()) /
             name;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace smoothq::testing
