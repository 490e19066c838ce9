#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace tsct {

using Label = std::size_t;

/// An ordered, non-empty sequence of finite real samples.
class TimeSeries {
public:
  explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) { throw PreconditionError("time series must contain at least one sample"); }
    for (std::size_t t = 0; t < values_.size(); ++t) {
      if (!std::isfinite(values_[t])) {
        throw DataError("non-finite sample at index " + std::to_string(t));
      }
    }
  }

  TimeSeries(std::initializer_list<double> values) : TimeSeries(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t t) const { return values_[t]; }
  std::span<const double> values() const noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
  std::vector<double> values_;
};

struct LabeledSeries {
  TimeSeries series;
  Label label;

  friend bool operator==(const LabeledSeries&, const LabeledSeries&) = default;
};

using Split = std::vector<LabeledSeries>;

/// A named train/test pair of labelled splits over C canonical classes.
///
/// Construction enforces: train non-empty, every label below class_count, every
/// class present in train, and one common series length across both splits.
class Dataset {
public:
  Dataset(std::string name, Split train, Split test, std::size_t class_count)
      : name_(std::move(name)), train_(std::move(train)), test_(std::move(test)), class_count_(class_count) {
    if (class_count_ == 0) { throw DataError(name_ + ": class count must be positive"); }
    if (train_.empty()) { throw DataError(name_ + ": train split is empty"); }
    const std::size_t length = train_.front().series.size();
    std::vector<bool> seen(class_count_, false);
    auto check = [&](const Split& split, const char* which) {
      for (const auto& item : split) {
        if (item.label >= class_count_) {
          throw DataError(name_ + ": " + which + " label " + std::to_string(item.label) + " out of range");
        }
        if (item.series.size() != length) {
          throw DataError(name_ + ": " + which + " series lengths differ");
        }
      }
    };
    check(train_, "train");
    check(test_, "test");
    for (const auto& item : train_) { seen[item.label] = true; }
    for (std::size_t c = 0; c < class_count_; ++c) {
      if (!seen[c]) { throw DataError(name_ + ": class " + std::to_string(c) + " has no train members"); }
    }
  }

  const std::string& name() const noexcept { return name_; }
  const Split& train() const noexcept { return train_; }
  const Split& test() const noexcept { return test_; }
  std::size_t class_count() const noexcept { return class_count_; }
  std::size_t series_length() const noexcept { return train_.front().series.size(); }

  /// Same dataset with the test split dropped.
  Dataset without_test() const { return Dataset(name_, train_, {}, class_count_); }

private:
  std::string name_;
  Split train_;
  Split test_;
  std::size_t class_count_;
};

/// Mean 0, population standard deviation 1. Near-constant input (std < 1e-8) maps to zeros.
inline TimeSeries z_normalize(const TimeSeries& series) {
  const auto n = static_cast<double>(series.size());
  double mean = 0.0;
  for (double v : series) { mean += v; }
  mean /= n;
  double var = 0.0;
  for (double v : series) { var += (v - mean) * (v - mean); }
  const double sd = std::sqrt(var / n);

  std::vector<double> out(series.size(), 0.0);
  if (sd >= 1e-8) {
    for (std::size_t t = 0; t < series.size(); ++t) { out[t] = (series[t] - mean) / sd; }
  }
  return TimeSeries(std::move(out));
}

/// Partition a split by label, preserving input order inside each group.
inline std::map<Label, std::vector<TimeSeries>> group_by_class(std::span<const LabeledSeries> split) {
  std::map<Label, std::vector<TimeSeries>> groups;
  for (const auto& item : split) { groups[item.label].push_back(item.series); }
  return groups;
}

/// Series of a split without their labels.
inline std::vector<TimeSeries> series_of(std::span<const LabeledSeries> split) {
  std::vector<TimeSeries> out;
  out.reserve(split.size());
  for (const auto& item : split) { out.push_back(item.series); }
  return out;
}

} // namespace tsct
