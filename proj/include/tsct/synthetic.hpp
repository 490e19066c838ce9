#pragma once

// Small generated datasets for demos and tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"

namespace tsct::synthetic {

struct SinusoidSpec {
  std::string name;
  /// Cycles per series, one entry per class.
  std::vector<double> frequencies;
  std::size_t train_size = 20;
  std::size_t test_size = 20;
  std::size_t length = 64;
  double noise = 0.2;
  std::uint64_t seed = 0;
};

/// Noisy sinusoids with a random phase; class c oscillates at frequencies[c].
/// Labels cycle 0,1,...,C-1 so every class appears in train. Series are z-normalised.
inline Dataset sinusoids(const SinusoidSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, spec.noise);
  const std::size_t classes = spec.frequencies.size();

  auto make = [&](std::size_t count) {
    Split split;
    for (std::size_t i = 0; i < count; ++i) {
      const Label c = i % classes;
      const double p = phase(rng);
      std::vector<double> v(spec.length);
      for (std::size_t t = 0; t < spec.length; ++t) {
        const double x = static_cast<double>(t) / static_cast<double>(spec.length);
        v[t] = std::sin(2.0 * std::numbers::pi * spec.frequencies[c] * x + p) + noise(rng);
      }
      split.push_back({z_normalize(TimeSeries(std::move(v))), c});
    }
    return split;
  };
  auto train = make(spec.train_size);
  auto test = make(spec.test_size);
  return Dataset(spec.name, std::move(train), std::move(test), classes);
}

/// Constant +1 series (class 0) against constant -1 series (class 1).
inline Dataset constant_levels(const std::string& name, std::size_t per_split, std::size_t length) {
  Split train;
  Split test;
  for (std::size_t i = 0; i < per_split; ++i) {
    const Label c = i % 2;
    const double level = c == 0 ? 1.0 : -1.0;
    train.push_back({TimeSeries(std::vector<double>(length, level)), c});
    test.push_back({TimeSeries(std::vector<double>(length, level)), c});
  }
  return Dataset(name, std::move(train), std::move(test), 2);
}

} // namespace tsct::synthetic
