#pragma once

// Reader/writer for the UCR archive text layout: one record per line,
// `label<delim>v1<delim>...<delim>vT`, delimiter tab or comma.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"

namespace tsct::ucr {

namespace detail {

  struct RawRecord {
    double label;
    std::vector<double> values;
    std::size_t line;
  };

  inline double parse_number(std::string_view field, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\r')) { field.remove_prefix(1); }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) { field.remove_suffix(1); }
    if (!field.empty() && field.front() == '+') { field.remove_prefix(1); }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw ParseError("cannot parse number '" + std::string(field) + "'", line);
    }
    return value;
  }

  inline std::vector<RawRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) { throw IoError("cannot open " + path.string()); }

    std::vector<RawRecord> records;
    std::optional<char> delim;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
      ++line_no;
      if (!text.empty() && text.back() == '\r') { text.pop_back(); }
      if (text.find_first_not_of(" \t") == std::string::npos) { continue; }
      if (!delim) { delim = text.find('\t') != std::string::npos ? '\t' : ','; }

      std::vector<double> fields;
      std::string_view rest(text);
      while (true) {
        const auto pos = rest.find(*delim);
        fields.push_back(parse_number(rest.substr(0, pos), line_no));
        if (pos == std::string_view::npos) { break; }
        rest.remove_prefix(pos + 1);
      }
      if (fields.size() < 2) { throw ParseError(path.string() + ": record has no samples", line_no); }
      RawRecord rec{fields.front(), std::vector<double>(fields.begin() + 1, fields.end()), line_no};
      if (!records.empty() && rec.values.size() != records.front().values.size()) {
        throw ParseError(path.string() + ": ragged record of length " + std::to_string(rec.values.size()) +
                             ", expected " + std::to_string(records.front().values.size()),
                         line_no);
      }
      records.push_back(std::move(rec));
    }
    return records;
  }

  inline Split to_split(const std::vector<RawRecord>& records, const std::map<double, Label>& codes,
                        const std::filesystem::path& path) {
    Split split;
    split.reserve(records.size());
    for (const auto& rec : records) {
      auto it = codes.find(rec.label);
      if (it == codes.end()) {
        throw DataError(path.string() + ": label " + std::to_string(rec.label) + " absent from the train split");
      }
      try {
        split.push_back({TimeSeries(rec.values), it->second});
      } catch (const DataError& e) {
        throw DataError(path.string() + " line " + std::to_string(rec.line) + ": " + e.what());
      }
    }
    return split;
  }

} // namespace detail

/// Load a train/test pair. Raw labels are canonicalised to 0..C-1 by ascending
/// numeric order; samples are stored as read (no re-normalisation).
inline Dataset load_ucr_dataset(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                                std::string name) {
  const auto train_raw = detail::read_records(train_path);
  if (train_raw.empty()) { throw DataError(train_path.string() + ": empty train file"); }
  const auto test_raw = detail::read_records(test_path);

  std::map<double, Label> codes;
  for (const auto& rec : train_raw) { codes.emplace(rec.label, 0); }
  Label next = 0;
  for (auto& [raw, code] : codes) { code = next++; }

  auto train = detail::to_split(train_raw, codes, train_path);
  auto test = detail::to_split(test_raw, codes, test_path);
  return Dataset(std::move(name), std::move(train), std::move(test), codes.size());
}

/// Locate `<NAME>_TRAIN` / `<NAME>_TEST` (optionally with .tsv/.csv/.txt) either
/// directly in `dir` or in `dir/<NAME>/`.
inline std::pair<std::filesystem::path, std::filesystem::path> find_dataset_files(const std::filesystem::path& dir,
                                                                                    const std::string& name) {
  auto find_one = [&](const std::string& suffix) -> std::optional<std::filesystem::path> {
    for (const auto& base : {dir / name, dir}) {
      for (const char* ext : {"", ".tsv", ".csv", ".txt"}) {
        auto candidate = base / (name + suffix + ext);
        if (std::filesystem::is_regular_file(candidate)) { return candidate; }
      }
    }
    return std::nullopt;
  };
  auto train = find_one("_TRAIN");
  auto test = find_one("_TEST");
  if (!train || !test) { throw LookupError("dataset '" + name + "' not found under " + dir.string()); }
  return {*train, *test};
}

inline Dataset load_named_dataset(const std::filesystem::path& dir, const std::string& name) {
  auto [train, test] = find_dataset_files(dir, name);
  return load_ucr_dataset(train, test, name);
}

/// Write one split with canonical labels, samples at 17 significant digits.
inline void write_split(const std::filesystem::path& path, std::span<const LabeledSeries> split, char delim = '\t') {
  std::ofstream out(path);
  if (!out) { throw IoError("cannot write " + path.string()); }
  char buf[32];
  for (const auto& item : split) {
    out << item.label;
    for (double v : item.series) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << delim << buf;
    }
    out << '\n';
  }
  if (!out) { throw IoError("write failed for " + path.string()); }
}

/// Write `dir/<NAME>/<NAME>_TRAIN.tsv` and `_TEST.tsv`.
inline void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  const auto sub = dir / dataset.name();
  std::filesystem::create_directories(sub);
  write_split(sub / (dataset.name() + "_TRAIN.tsv"), dataset.train());
  write_split(sub / (dataset.name() + "_TEST.tsv"), dataset.test());
}

} // namespace tsct::ucr
