#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the DP code paths it is used to check.

#include <cstddef>
#include <filesystem>
#include <algorithm>
#include <concepts>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <tsct/core.hpp>

namespace oracle {

/// Minimum over every monotone, continuous warping path of the squared
/// differences summed in path order, found by exhaustive enumeration.
inline double dtw_bruteforce(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    const double d = a[i] - b[j];
    acc = acc + d * d;
    if (i == n - 1 && j == m - 1) {
      if (acc < best) { best = acc; }
      return;
    }
    if (i + 1 < n && j + 1 < m) { walk(i + 1, j + 1, acc); }
    if (i + 1 < n) { walk(i + 1, j, acc); }
    if (j + 1 < m) { walk(i, j + 1, acc); }
  };
  walk(0, 0, 0.0);
  return best;
}

// A template so that braced lists keep resolving to the vector overload.
template <class S>
  requires std::same_as<S, tsct::TimeSeries>
double dtw_bruteforce(const S& a, const S& b) {
  return dtw_bruteforce(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
}

/// Sum of squared differences along a given path (1-based steps).
template <class Path>
double path_cost(const tsct::TimeSeries& a, const tsct::TimeSeries& b, const Path& path) {
  double acc = 0.0;
  for (const auto& s : path) {
    const double d = a[s.i - 1] - b[s.j - 1];
    acc = acc + d * d;
  }
  return acc;
}

/// Brute-force medoid: summed oracle distances, lowest index on ties.
inline std::size_t medoid_bruteforce(const std::vector<tsct::TimeSeries>& set) {
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < set.size(); ++j) { sum += dtw_bruteforce(set[i], set[j]); }
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

inline double sum_to_set(const tsct::TimeSeries& p, const std::vector<tsct::TimeSeries>& set) {
  double s = 0.0;
  for (const auto& x : set) { s += dtw_bruteforce(p, x); }
  return s;
}

inline tsct::TimeSeries random_series(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len, double lo,
                                      double hi) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_real_distribution<double> val(lo, hi);
  std::vector<double> v(len(rng));
  for (auto& x : v) { x = val(rng); }
  return tsct::TimeSeries(std::move(v));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("tsct_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace oracle

#include <tsct/fcn.hpp>

namespace oracle {

struct GradientComparison {
  double analytic;
  double numeric;
};

/// Central finite differences of the mean cross-entropy with respect to every
/// trainable value, paired with the backpropagated gradient.
inline std::vector<GradientComparison> finite_difference_check(const tsct::FcnModel& model,
                                                               const std::vector<tsct::LabeledSeries>& batch,
                                                               double step = 1e-4) {
  auto analytic_model = model;
  auto grads = tsct::loss_and_gradients(analytic_model, batch).gradients;
  auto g = grads.tensors();
  std::vector<GradientComparison> out;
  tsct::FcnModel probe = model;
  auto params = probe.trainable();
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + step;
      const double up = tsct::loss_and_gradients(probe, batch).loss;
      params[k][i] = saved - step;
      const double down = tsct::loss_and_gradients(probe, batch).loss;
      params[k][i] = saved;
      out.push_back({g[k][i], (up - down) / (2.0 * step)});
    }
  }
  return out;
}

/// |a - n| / max(|a|, |n|, floor); the floor keeps gradients that are zero
/// analytically (conv biases ahead of batch norm) from dividing by round-off.
inline double relative_error(const GradientComparison& c, double floor = 1e-6) {
  const double scale = std::max({std::abs(c.analytic), std::abs(c.numeric), floor});
  return std::abs(c.analytic - c.numeric) / scale;
}

inline tsct::Architecture tiny_architecture() {
  tsct::Architecture a;
  a.filters = {4, 6, 3};
  return a;
}

inline std::vector<tsct::LabeledSeries> random_batch(std::mt19937_64& rng, std::size_t size, std::size_t length,
                                                     std::size_t classes) {
  std::normal_distribution<double> nd;
  std::vector<tsct::LabeledSeries> batch;
  for (std::size_t b = 0; b < size; ++b) {
    std::vector<double> v(length);
    for (auto& x : v) { x = nd(rng); }
    batch.push_back({tsct::TimeSeries(std::move(v)), b % classes});
  }
  return batch;
}

/// Perturb BN affine parameters and biases so that no gradient is trivially symmetric.
inline void jitter(tsct::FcnModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& b : model.blocks) {
    for (Eigen::Index i = 0; i < b.gamma.size(); ++i) {
      b.gamma(i) += u(rng);
      b.beta(i) += u(rng);
      b.bias(i) += u(rng);
    }
  }
  for (Eigen::Index i = 0; i < model.head_bias.size(); ++i) { model.head_bias(i) += u(rng); }
}

} // namespace oracle

namespace oracle {

/// Smallest |ReLU input| over a train-mode pass.
inline double relu_margin(const tsct::FcnModel& model, const std::vector<tsct::LabeledSeries>& batch) {
  const auto series = tsct::series_of(batch);
  const auto trace = tsct::detail::forward_batch_stats(model, series);
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& pre : trace.pre_relu) { margin = std::min(margin, pre.cwiseAbs().minCoeff()); }
  return margin;
}

struct GradientInstance {
  tsct::FcnModel model;
  std::vector<tsct::LabeledSeries> batch;
  /// Draws discarded because a ReLU input sat within the margin of its kink.
  std::size_t redraws = 0;
};

/// A random tiny model plus batch whose ReLU inputs all keep at least `margin`
/// away from zero, so a +-1e-4 stencil never straddles a kink.
inline GradientInstance gradient_instance(std::mt19937_64& rng, std::size_t classes, std::size_t batch_size = 4,
                                          std::size_t length = 16, double margin = 1e-3) {
  GradientInstance inst;
  while (true) {
    inst.model = tsct::build_model(classes, rng(), tiny_architecture());
    jitter(inst.model, rng);
    inst.batch = random_batch(rng, batch_size, length, classes);
    if (relu_margin(inst.model, inst.batch) >= margin) { return inst; }
    ++inst.redraws;
  }
}

} // namespace oracle
