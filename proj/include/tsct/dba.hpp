#pragma once

// DTW Barycenter Averaging: refine a prototype so that it summarises a set of
// series in the space induced by DTW. The prototype length never changes.

#include <cstddef>
#include <span>
#include <vector>

#include "core.hpp"
#include "dtw.hpp"
#include "errors.hpp"
#include "parallel.hpp"

namespace tsct {

struct DbaConfig {
  std::size_t iterations = 10;
  /// Threads used for per-member alignments; does not affect the result.
  std::size_t workers = 1;

  void validate() const {
    if (iterations < 1) { throw PreconditionError("DBA needs at least one iteration"); }
  }
};

/// One refinement step: every prototype coordinate becomes the mean of the
/// member samples aligned to it.
inline TimeSeries dba_iteration(const TimeSeries& prototype, std::span<const TimeSeries> set,
                                std::size_t workers = 1) {
  if (set.empty()) { throw PreconditionError("DBA over an empty set"); }
  const std::size_t length = prototype.size();

  // per-member partial sums, reduced in member order afterwards
  std::vector<std::vector<double>> sums(set.size(), std::vector<double>(length, 0.0));
  std::vector<std::vector<std::size_t>> counts(set.size(), std::vector<std::size_t>(length, 0));
  parallel_for(set.size(), workers, [&](std::size_t m) {
    const auto alignment = dtw_path(prototype, set[m]);
    for (const auto& step : alignment.path) {
      sums[m][step.i - 1] += set[m][step.j - 1];
      counts[m][step.i - 1] += 1;
    }
  });

  std::vector<double> total(length, 0.0);
  std::vector<std::size_t> count(length, 0);
  for (std::size_t m = 0; m < set.size(); ++m) {
    for (std::size_t i = 0; i < length; ++i) {
      total[i] += sums[m][i];
      count[i] += counts[m][i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) { total[i] /= static_cast<double>(count[i]); }
  return TimeSeries(std::move(total));
}

/// Medoid-initialised DBA with a fixed number of refinement steps.
inline TimeSeries dba_average(std::span<const TimeSeries> set, const DbaConfig& config = {}) {
  config.validate();
  if (set.empty()) { throw PreconditionError("DBA over an empty set"); }
  TimeSeries prototype = set[medoid(set, config.workers)];
  for (std::size_t it = 0; it < config.iterations; ++it) { prototype = dba_iteration(prototype, set, config.workers); }
  return prototype;
}

} // namespace tsct
