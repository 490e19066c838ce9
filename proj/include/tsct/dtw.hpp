#pragma once

// Exact, unconstrained Dynamic Time Warping with squared pointwise cost and the
// symmetric step pattern (match / insertion / deletion, all weight 1).

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "parallel.hpp"

namespace tsct {

/// One alignment step, 1-based indices into the two series.
struct WarpStep {
  std::size_t i;
  std::size_t j;

  friend bool operator==(const WarpStep&, const WarpStep&) = default;
};

using WarpingPath = std::vector<WarpStep>;

struct DtwAlignment {
  double cost;
  WarpingPath path;
};

namespace detail {

  inline double sqdist(double x, double y) {
    const double d = x - y;
    return d * d;
  }

  inline void require_nonempty(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) { throw PreconditionError("DTW requires non-empty series"); }
  }

} // namespace detail

/// DTW distance using two rolling rows of the cost table.
inline double dtw_distance(std::span<const double> a, std::span<const double> b) {
  detail::require_nonempty(a, b);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t m = b.size();
  std::vector<double> prev(m, inf);
  std::vector<double> curr(m, inf);

  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = inf;
        if (i > 0 && j > 0) { best = prev[j - 1]; }
        if (i > 0) { best = std::min(best, prev[j]); }
        if (j > 0) { best = std::min(best, curr[j - 1]); }
      }
      curr[j] = best + detail::sqdist(a[i], b[j]);
    }
    std::swap(prev, curr);
  }
  return prev[m - 1];
}

inline double dtw_distance(const TimeSeries& a, const TimeSeries& b) { return dtw_distance(a.values(), b.values()); }

/// DTW distance plus the optimal warping path. The full table is kept for the
/// backtrack; ties prefer the diagonal, then the step decreasing i, then j.
inline DtwAlignment dtw_path(std::span<const double> a, std::span<const double> b) {
  detail::require_nonempty(a, b);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> table(n * m, inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return table[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = inf;
        if (i > 0 && j > 0) { best = at(i - 1, j - 1); }
        if (i > 0) { best = std::min(best, at(i - 1, j)); }
        if (j > 0) { best = std::min(best, at(i, j - 1)); }
      }
      at(i, j) = best + detail::sqdist(a[i], b[j]);
    }
  }

  WarpingPath path;
  path.reserve(n + m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  path.push_back({i + 1, j + 1});
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.push_back({i + 1, j + 1});
  }
  std::reverse(path.begin(), path.end());
  return {at(n - 1, m - 1), std::move(path)};
}

inline DtwAlignment dtw_path(const TimeSeries& a, const TimeSeries& b) { return dtw_path(a.values(), b.values()); }

/// Symmetric matrix of pairwise DTW distances, row-major n*n.
inline std::vector<double> pairwise_dtw(std::span<const TimeSeries> set, std::size_t workers = 1) {
  const std::size_t n = set.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) { pairs.emplace_back(i, j); }
  }
  std::vector<double> out(n * n, 0.0);
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    auto [i, j] = pairs[k];
    const double d = dtw_distance(set[i], set[j]);
    out[i * n + j] = d;
    out[j * n + i] = d;
  });
  return out;
}

/// Index of the member minimising the summed DTW distance to the others; lowest index on ties.
inline std::size_t medoid(std::span<const TimeSeries> set, std::size_t workers = 1) {
  if (set.empty()) { throw PreconditionError("medoid of an empty set"); }
  const std::size_t n = set.size();
  const auto dist = pairwise_dtw(set, workers);
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) { sum += dist[i * n + j]; }
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

} // namespace tsct
