#pragma once

// Inter-dataset similarity: reduce each dataset to one DBA prototype per class
// (train split only), then take the minimum DTW distance over class pairs.

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "dba.hpp"
#include "dtw.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "parallel.hpp"

namespace tsct {

struct ClassPrototypes {
  std::string dataset_name;
  std::map<Label, TimeSeries> prototypes;
};

/// N*N matrix of dataset distances; rows and columns follow `names`.
struct SimilarityMatrix {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const noexcept { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * names.size() + j]; }

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) { throw LookupError("unknown dataset '" + name + "'"); }
    return static_cast<std::size_t>(it - names.begin());
  }

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;
};

struct RankedSource {
  std::string name;
  double distance;
};

struct SourceRanking {
  std::string target;
  std::vector<RankedSource> ranked;
};

inline ClassPrototypes reduce_dataset(const Dataset& dataset, const DbaConfig& config = {}) {
  config.validate();
  ClassPrototypes out{dataset.name(), {}};
  const auto groups = group_by_class(dataset.train());
  for (Label c = 0; c < dataset.class_count(); ++c) {
    auto it = groups.find(c);
    if (it == groups.end() || it->second.empty()) {
      throw DataError(dataset.name() + ": class " + std::to_string(c) + " has no train members");
    }
    out.prototypes.emplace(c, dba_average(it->second, config));
  }
  return out;
}

/// Minimum DTW distance over all (class of a, class of b) prototype pairs.
inline double dataset_distance(const ClassPrototypes& a, const ClassPrototypes& b) {
  if (a.prototypes.empty() || b.prototypes.empty()) {
    throw PreconditionError("dataset distance needs at least one prototype per side");
  }
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& [ca, pa] : a.prototypes) {
    for (const auto& [cb, pb] : b.prototypes) { dist = std::min(dist, dtw_distance(pa, pb)); }
  }
  return dist;
}

/// Distance matrix from already reduced datasets.
inline SimilarityMatrix similarity_matrix(const std::vector<ClassPrototypes>& reduced, std::size_t workers = 1) {
  SimilarityMatrix m;
  const std::size_t n = reduced.size();
  std::set<std::string> unique;
  for (const auto& r : reduced) {
    if (!unique.insert(r.dataset_name).second) { throw DataError("duplicate dataset name '" + r.dataset_name + "'"); }
    m.names.push_back(r.dataset_name);
  }
  m.values.assign(n * n, 0.0);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) { pairs.emplace_back(i, j); }
  }
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    auto [i, j] = pairs[k];
    const double d = dataset_distance(reduced[i], reduced[j]);
    m.at(i, j) = d;
    m.at(j, i) = d;
  });
  return m;
}

/// Reduce every dataset once, then fill the matrix. Diagonal is zero.
inline SimilarityMatrix similarity_matrix(const std::vector<Dataset>& datasets, const DbaConfig& config = {}) {
  if (datasets.size() < 2) { throw PreconditionError("similarity matrix needs at least two datasets"); }
  std::set<std::string> unique;
  for (const auto& d : datasets) {
    if (!unique.insert(d.name()).second) { throw DataError("duplicate dataset name '" + d.name() + "'"); }
  }
  std::vector<ClassPrototypes> reduced(datasets.size());
  DbaConfig inner = config;
  inner.workers = 1;
  parallel_for(datasets.size(), config.workers, [&](std::size_t i) { reduced[i] = reduce_dataset(datasets[i], inner); });
  return similarity_matrix(reduced, config.workers);
}

/// Every other dataset ordered by distance to `target`; ties by name.
inline SourceRanking rank_sources(const SimilarityMatrix& matrix, const std::string& target) {
  const std::size_t t = matrix.index_of(target);
  SourceRanking out{target, {}};
  for (std::size_t j = 0; j < matrix.size(); ++j) {
    if (j != t) { out.ranked.push_back({matrix.names[j], matrix.at(t, j)}); }
  }
  std::sort(out.ranked.begin(), out.ranked.end(), [](const RankedSource& x, const RankedSource& y) {
    if (x.distance != y.distance) { return x.distance < y.distance; }
    return x.name < y.name;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Export formats

inline void check_csv_name(const std::string& name) {
  if (name.empty() || name.find_first_of(",\n\r\"") != std::string::npos) {
    throw DataError("dataset name '" + name + "' cannot be written to CSV");
  }
}

/// Header row and column of names; values at 17 significant digits.
inline std::string matrix_to_csv(const SimilarityMatrix& m) {
  std::ostringstream out;
  for (const auto& name : m.names) {
    check_csv_name(name);
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.names[i];
    for (std::size_t j = 0; j < m.size(); ++j) { out << ',' << format_double(m.at(i, j)); }
    out << '\n';
  }
  return out.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) { cells.push_back(cell); }
  if (!line.empty() && line.back() == ',') { cells.emplace_back(); }
  return cells;
}

inline SimilarityMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  SimilarityMatrix m;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    auto cells = split_csv_line(line);
    if (m.names.empty()) {
      if (cells.size() < 2 || !cells.front().empty()) { throw ParseError("matrix CSV header malformed", line_no); }
      m.names.assign(cells.begin() + 1, cells.end());
      continue;
    }
    const std::size_t row = m.values.size() / m.names.size();
    if (cells.size() != m.names.size() + 1) { throw ParseError("matrix CSV row has wrong width", line_no); }
    if (row >= m.names.size() || cells.front() != m.names[row]) {
      throw ParseError("matrix CSV row label does not match header", line_no);
    }
    for (std::size_t j = 1; j < cells.size(); ++j) {
      try {
        std::size_t used = 0;
        m.values.push_back(std::stod(cells[j], &used));
        if (used != cells[j].size()) { throw std::invalid_argument("trailing"); }
      } catch (const std::exception&) {
        throw ParseError("bad matrix value '" + cells[j] + "'", line_no);
      }
    }
  }
  if (m.names.empty() || m.values.size() != m.names.size() * m.names.size()) {
    throw ParseError("matrix CSV is incomplete");
  }
  return m;
}

/// `[{source, distance, rank}, ...]`, rank starting at 1.
inline nlohmann::json ranking_to_json(const SourceRanking& ranking) {
  auto out = nlohmann::json::array();
  for (std::size_t k = 0; k < ranking.ranked.size(); ++k) {
    out.push_back({{"source", ranking.ranked[k].name}, {"distance", ranking.ranked[k].distance}, {"rank", k + 1}});
  }
  return out;
}

} // namespace tsct
