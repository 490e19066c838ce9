#pragma once

// Experiment engine: scratch vs. transferred accuracy for (source, target)
// pairs, the full pairwise matrix with on-disk resume, min/median/max
// aggregation and the nearest-source vs. random-source comparison.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "errors.hpp"
#include "fcn.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "similarity.hpp"
#include "transfer.hpp"

namespace tsct {

/// 100 * (transferred - baseline) / baseline.
inline double accuracy_variation(double baseline, double transferred) {
  if (!(baseline > 0.0)) { throw UndefinedVariationError("accuracy variation is undefined for a zero baseline"); }
  return 100.0 * (transferred - baseline) / baseline;
}

struct ExperimentConfig {
  TrainConfig train;
  /// One training per seed; cell accuracies are means over seeds.
  std::vector<std::uint64_t> seeds{0};
  std::size_t workers = 1;
  /// Optional progress sink.
  std::function<void(const std::string&)> log;
};

struct SeedRun {
  std::uint64_t seed = 0;
  double baseline_accuracy = 0.0;
  double transfer_accuracy = 0.0;
  std::size_t baseline_best_epoch = 0;
  std::size_t transfer_best_epoch = 0;
  TrainHistory baseline_history;
  TrainHistory transfer_history;
};

struct PairResult {
  std::string source;
  std::string target;
  double baseline_accuracy = 0.0;
  double transfer_accuracy = 0.0;
  /// Absent when the baseline accuracy is zero.
  std::optional<double> variation_percent;
  std::vector<SeedRun> runs;
};

/// A model trained from scratch and its accuracy on the dataset's test split.
struct ScratchRun {
  TrainResult result;
  double test_accuracy = 0.0;
};

inline ScratchRun train_scratch(const Dataset& dataset, TrainConfig config, std::uint64_t seed,
                                const Architecture& arch = {}) {
  config.seed = seed;
  ScratchRun run;
  run.result = train(build_model(dataset.class_count(), seed, arch), dataset.train(), config);
  run.test_accuracy = evaluate(run.result.model, dataset.test());
  return run;
}

namespace detail {

  inline void finish_pair(PairResult& out) {
    const double n = static_cast<double>(out.runs.size());
    out.baseline_accuracy = 0.0;
    out.transfer_accuracy = 0.0;
    for (const auto& r : out.runs) {
      out.baseline_accuracy += r.baseline_accuracy;
      out.transfer_accuracy += r.transfer_accuracy;
    }
    out.baseline_accuracy /= n;
    out.transfer_accuracy /= n;
    out.variation_percent.reset();
    if (out.baseline_accuracy > 0.0) {
      out.variation_percent = accuracy_variation(out.baseline_accuracy, out.transfer_accuracy);
    }
  }

  /// Fine-tune one stored source model on the target and fill the transfer half of a SeedRun.
  inline void transfer_half(SeedRun& run, const FcnModel& pretrained, const Dataset& target, TrainConfig config) {
    config.seed = run.seed;
    auto tuned = fine_tune(pretrained, target, config, run.seed);
    run.transfer_accuracy = evaluate(tuned.model, target.test());
    run.transfer_best_epoch = tuned.best_epoch;
    run.transfer_history = std::move(tuned.history);
  }

} // namespace detail

/// Baseline (scratch on target) against transfer (pre-train on source,
/// head swap, fine-tune on target), both scored on the target test split.
/// The pre-trained model passes through binary32 storage precision, exactly
/// as it does when the matrix runner reloads it from disk.
inline PairResult run_pair(const Dataset& source, const Dataset& target, const ExperimentConfig& config,
                           const Architecture& arch = {}) {
  if (source.name() == target.name()) { throw PreconditionError("source and target must be distinct datasets"); }
  if (config.seeds.empty()) { throw PreconditionError("at least one seed is required"); }
  PairResult out{source.name(), target.name(), 0.0, 0.0, std::nullopt, {}};
  for (auto seed : config.seeds) {
    SeedRun run;
    run.seed = seed;
    auto baseline = train_scratch(target, config.train, seed, arch);
    run.baseline_accuracy = baseline.test_accuracy;
    run.baseline_best_epoch = baseline.result.best_epoch;
    run.baseline_history = std::move(baseline.result.history);
    auto pretrained = train_scratch(source, config.train, seed, arch);
    detail::transfer_half(run, round_to_storage_precision(pretrained.result.model), target, config.train);
    out.runs.push_back(std::move(run));
  }
  detail::finish_pair(out);
  return out;
}

// ---------------------------------------------------------------------------
// JSON forms

inline nlohmann::json history_to_json(const TrainHistory& h) {
  std::vector<double> loss;
  std::vector<double> acc;
  for (const auto& e : h.epochs) {
    loss.push_back(e.loss);
    acc.push_back(e.accuracy);
  }
  return {{"loss", loss}, {"accuracy", acc}};
}

inline TrainHistory history_from_json(const nlohmann::json& j) {
  TrainHistory h;
  const auto loss = j.at("loss").get<std::vector<double>>();
  const auto acc = j.at("accuracy").get<std::vector<double>>();
  if (loss.size() != acc.size()) { throw ParseError("history loss/accuracy lengths differ"); }
  for (std::size_t i = 0; i < loss.size(); ++i) { h.epochs.push_back({loss[i], acc[i], 0.0}); }
  return h;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},       {"beta2", c.beta2},           {"epsilon", c.epsilon}};
}

inline nlohmann::json pair_to_json(const PairResult& p) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : p.runs) {
    runs.push_back({{"seed", r.seed},
                    {"baseline_accuracy", r.baseline_accuracy},
                    {"transfer_accuracy", r.transfer_accuracy},
                    {"baseline_best_epoch", r.baseline_best_epoch},
                    {"transfer_best_epoch", r.transfer_best_epoch},
                    {"baseline_history", history_to_json(r.baseline_history)},
                    {"transfer_history", history_to_json(r.transfer_history)}});
  }
  nlohmann::json j{{"status", "ok"},
                   {"source", p.source},
                   {"target", p.target},
                   {"baseline_accuracy", p.baseline_accuracy},
                   {"transfer_accuracy", p.transfer_accuracy},
                   {"seed_count", p.runs.size()},
                   {"runs", runs}};
  j["variation_percent"] = p.variation_percent ? nlohmann::json(*p.variation_percent) : nlohmann::json(nullptr);
  return j;
}

inline PairResult pair_from_json(const nlohmann::json& j) {
  PairResult p;
  p.source = j.at("source").get<std::string>();
  p.target = j.at("target").get<std::string>();
  p.baseline_accuracy = j.at("baseline_accuracy").get<double>();
  p.transfer_accuracy = j.at("transfer_accuracy").get<double>();
  if (!j.at("variation_percent").is_null()) { p.variation_percent = j.at("variation_percent").get<double>(); }
  for (const auto& r : j.at("runs")) {
    SeedRun s;
    s.seed = r.at("seed").get<std::uint64_t>();
    s.baseline_accuracy = r.at("baseline_accuracy").get<double>();
    s.transfer_accuracy = r.at("transfer_accuracy").get<double>();
    s.baseline_best_epoch = r.at("baseline_best_epoch").get<std::size_t>();
    s.transfer_best_epoch = r.at("transfer_best_epoch").get<std::size_t>();
    s.baseline_history = history_from_json(r.at("baseline_history"));
    s.transfer_history = history_from_json(r.at("transfer_history"));
    p.runs.push_back(std::move(s));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Pairwise matrix

/// Rows are sources, columns targets; the diagonal is always absent.
struct VariationMatrix {
  std::vector<std::string> names;
  std::vector<std::optional<double>> values;

  std::size_t size() const noexcept { return names.size(); }
  const std::optional<double>& at(std::size_t source, std::size_t target) const {
    return values[source * names.size() + target];
  }
  std::optional<double>& at(std::size_t source, std::size_t target) { return values[source * names.size() + target]; }
};

// Aggregation

struct Spread {
  double min;
  double median;
  double max;
};

/// Min, median (mean of the middle two for even counts) and max.
inline std::optional<Spread> spread(std::vector<double> values) {
  if (values.empty()) { return std::nullopt; }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median = n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
  return Spread{values.front(), median, values.back()};
}

struct TargetAggregate {
  std::string target;
  std::optional<Spread> accuracy;
};

/// Per target column: spread of the transfer accuracies over all sources.
inline std::vector<TargetAggregate> aggregate(const VariationMatrix& transfer_accuracy) {
  std::vector<TargetAggregate> out;
  for (std::size_t t = 0; t < transfer_accuracy.size(); ++t) {
    std::vector<double> column;
    for (std::size_t s = 0; s < transfer_accuracy.size(); ++s) {
      if (s != t && transfer_accuracy.at(s, t)) { column.push_back(*transfer_accuracy.at(s, t)); }
    }
    out.push_back({transfer_accuracy.names[t], spread(std::move(column))});
  }
  return out;
}

inline std::string aggregate_to_csv(const std::vector<TargetAggregate>& rows) {
  std::ostringstream out;
  out << "target,min,median,max\n";
  for (const auto& r : rows) {
    out << r.target;
    if (r.accuracy) {
      out << ',' << format_double(r.accuracy->min) << ',' << format_double(r.accuracy->median) << ','
          << format_double(r.accuracy->max);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

struct CellFailure {
  std::string source;
  std::string target;
  std::string error;
};

struct MatrixRun {
  std::vector<std::string> names;
  /// Completed cells keyed by (source, target).
  std::map<std::pair<std::string, std::string>, PairResult> cells;
  std::vector<CellFailure> failures;
  VariationMatrix variation;
  /// Transfer accuracy per (source, target), same layout as `variation`.
  VariationMatrix transfer_accuracy;
  std::size_t scratch_trained = 0;
  std::size_t scratch_reused = 0;
  std::size_t scratch_failed = 0;
  std::size_t cells_computed = 0;
  std::size_t cells_reused = 0;
};

struct ResultLayout {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path model(const std::string& dataset, std::uint64_t seed) const {
    return root / "models" / (dataset + "__seed" + std::to_string(seed) + ".fcn");
  }
  std::filesystem::path scratch(const std::string& dataset, std::uint64_t seed) const {
    return root / "scratch" / (dataset + "__seed" + std::to_string(seed) + ".json");
  }
  std::filesystem::path cell(const std::string& source, const std::string& target) const {
    return root / "cells" / (source + "__" + target + ".json");
  }
  std::filesystem::path variation_csv() const { return root / "variation_matrix.csv"; }
  std::filesystem::path transfer_csv() const { return root / "transfer_accuracy.csv"; }
  std::filesystem::path aggregate_csv() const { return root / "aggregate.csv"; }
};

inline std::string variation_to_csv(const VariationMatrix& m) {
  std::ostringstream out;
  for (const auto& n : m.names) {
    check_csv_name(n);
    out << ',' << n;
  }
  out << '\n';
  for (std::size_t s = 0; s < m.size(); ++s) {
    out << m.names[s];
    for (std::size_t t = 0; t < m.size(); ++t) {
      out << ',';
      if (s != t && m.at(s, t)) { out << format_double(*m.at(s, t)); }
    }
    out << '\n';
  }
  return out.str();
}

inline VariationMatrix variation_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  VariationMatrix m;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    auto cells = split_csv_line(line);
    if (m.names.empty()) {
      if (cells.size() < 2 || !cells.front().empty()) { throw ParseError("matrix CSV header malformed", line_no); }
      m.names.assign(cells.begin() + 1, cells.end());
      m.values.assign(m.names.size() * m.names.size(), std::nullopt);
      continue;
    }
    if (row >= m.names.size() || cells.size() != m.names.size() + 1 || cells.front() != m.names[row]) {
      throw ParseError("matrix CSV row malformed", line_no);
    }
    for (std::size_t t = 0; t < m.names.size(); ++t) {
      if (!cells[t + 1].empty()) { m.at(row, t) = std::stod(cells[t + 1]); }
    }
    ++row;
  }
  if (m.names.empty() || row != m.names.size()) { throw ParseError("matrix CSV is incomplete"); }
  return m;
}

/// Train (or reuse) one scratch model per (dataset, seed), then fine-tune every
/// stored source model on every other dataset. Every artefact lives in `out_dir`
/// and is written atomically; finished artefacts are reused on a rerun. A failing
/// cell is recorded and the run carries on.
///
/// The scratch model of dataset D is both D's baseline (as a target) and D's
/// pre-trained network (as a source): the two trainings are the same computation.
inline MatrixRun run_matrix(const std::vector<Dataset>& datasets, const ExperimentConfig& config,
                            const std::filesystem::path& out_dir, const Architecture& arch = {}) {
  if (datasets.size() < 2) { throw PreconditionError("the matrix needs at least two datasets"); }
  if (config.seeds.empty()) { throw PreconditionError("at least one seed is required"); }
  std::vector<std::string> names;
  for (const auto& d : datasets) {
    check_csv_name(d.name());
    if (std::find(names.begin(), names.end(), d.name()) != names.end()) {
      throw DataError("duplicate dataset name '" + d.name() + "'");
    }
    names.push_back(d.name());
  }

  const ResultLayout layout{out_dir};
  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (config.log) {
      std::lock_guard lock(log_mutex);
      config.log(msg);
    }
  };

  nlohmann::json cfg{{"train", train_config_to_json(config.train)},
                     {"seeds", config.seeds},
                     {"filters", arch.filters},
                     {"kernels", arch.kernels}};
  if (std::filesystem::exists(layout.config())) {
    const auto previous = nlohmann::json::parse(read_text_file(layout.config()));
    if (previous != cfg) { throw DataError(out_dir.string() + " holds results for a different configuration"); }
  } else {
    write_text_file(layout.config(), json_text(cfg, 2) + "\n");
  }

  MatrixRun run;
  run.names = names;

  // Phase 1: scratch models.
  struct Job {
    std::size_t dataset;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (auto seed : config.seeds) { jobs.push_back({d, seed}); }
  }
  // 0 reused, 1 trained, 2 failed
  std::vector<int> trained(jobs.size(), 0);
  parallel_for(jobs.size(), config.workers, [&](std::size_t k) {
    const auto& ds = datasets[jobs[k].dataset];
    const auto seed = jobs[k].seed;
    if (std::filesystem::exists(layout.model(ds.name(), seed)) && std::filesystem::exists(layout.scratch(ds.name(), seed))) {
      return;
    }
    try {
      auto s = train_scratch(ds, config.train, seed, arch);
      save_model(s.result.model, layout.model(ds.name(), seed));
      nlohmann::json j{{"dataset", ds.name()},
                       {"seed", seed},
                       {"test_accuracy", s.test_accuracy},
                       {"best_epoch", s.result.best_epoch},
                       {"history", history_to_json(s.result.history)}};
      write_text_file(layout.scratch(ds.name(), seed), json_text(j, 1) + "\n");
      trained[k] = 1;
      log("scratch " + ds.name() + " seed " + std::to_string(seed) + ": test accuracy " + format_double(s.test_accuracy));
    } catch (const std::exception& e) {
      trained[k] = 2;
      log("scratch " + ds.name() + " seed " + std::to_string(seed) + " failed: " + e.what());
    }
  });
  for (auto t : trained) {
    if (t == 0) { ++run.scratch_reused; }
    if (t == 1) { ++run.scratch_trained; }
    if (t == 2) { ++run.scratch_failed; }
  }

  // Phase 2: transfer cells.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t s = 0; s < datasets.size(); ++s) {
    for (std::size_t t = 0; t < datasets.size(); ++t) {
      if (s != t) { cells.emplace_back(s, t); }
    }
  }
  std::vector<std::optional<PairResult>> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::vector<int> computed(cells.size(), 0);
  parallel_for(cells.size(), config.workers, [&](std::size_t k) {
    const auto& src = datasets[cells[k].first];
    const auto& tgt = datasets[cells[k].second];
    const auto path = layout.cell(src.name(), tgt.name());
    if (std::filesystem::exists(path)) {
      try {
        const auto j = nlohmann::json::parse(read_text_file(path));
        if (j.at("status") == "ok") {
          results[k] = pair_from_json(j);
          return;
        }
      } catch (const std::exception&) {
        // unreadable cell: recompute it
      }
    }
    try {
      PairResult p{src.name(), tgt.name(), 0.0, 0.0, std::nullopt, {}};
      for (auto seed : config.seeds) {
        SeedRun r;
        r.seed = seed;
        const auto scratch = nlohmann::json::parse(read_text_file(layout.scratch(tgt.name(), seed)));
        r.baseline_accuracy = scratch.at("test_accuracy").get<double>();
        r.baseline_best_epoch = scratch.at("best_epoch").get<std::size_t>();
        r.baseline_history = history_from_json(scratch.at("history"));
        detail::transfer_half(r, load_model(layout.model(src.name(), seed)), tgt, config.train);
        p.runs.push_back(std::move(r));
      }
      detail::finish_pair(p);
      write_text_file(path, json_text(pair_to_json(p), 1) + "\n");
      results[k] = std::move(p);
      computed[k] = 1;
      log("cell " + src.name() + " -> " + tgt.name() + ": variation " +
          (results[k]->variation_percent ? format_double(*results[k]->variation_percent) : std::string("n/a")));
    } catch (const std::exception& e) {
      errors[k] = e.what();
      nlohmann::json j{{"status", "failed"}, {"source", src.name()}, {"target", tgt.name()}, {"error", e.what()}};
      try {
        write_text_file(path, json_text(j, 1) + "\n");
      } catch (const std::exception&) {
      }
      log("cell " + src.name() + " -> " + tgt.name() + " failed: " + e.what());
    }
  });

  const std::size_t n = names.size();
  run.variation = {names, std::vector<std::optional<double>>(n * n)};
  run.transfer_accuracy = {names, std::vector<std::optional<double>>(n * n)};
  for (std::size_t k = 0; k < cells.size(); ++k) {
    auto [s, t] = cells[k];
    if (results[k]) {
      run.variation.at(s, t) = results[k]->variation_percent;
      run.transfer_accuracy.at(s, t) = results[k]->transfer_accuracy;
      computed[k] ? ++run.cells_computed : ++run.cells_reused;
      run.cells.emplace(std::make_pair(names[s], names[t]), std::move(*results[k]));
    } else {
      run.failures.push_back({names[s], names[t], errors[k]});
    }
  }
  write_text_file(layout.variation_csv(), variation_to_csv(run.variation));
  write_text_file(layout.transfer_csv(), variation_to_csv(run.transfer_accuracy));
  write_text_file(layout.aggregate_csv(), aggregate_to_csv(aggregate(run.transfer_accuracy)));
  return run;
}

/// Rebuild a MatrixRun's tables from the cell files of a result directory.
inline MatrixRun load_matrix_results(const std::filesystem::path& out_dir, const std::vector<std::string>& names) {
  const ResultLayout layout{out_dir};
  MatrixRun run;
  run.names = names;
  const std::size_t n = names.size();
  run.variation = {names, std::vector<std::optional<double>>(n * n)};
  run.transfer_accuracy = {names, std::vector<std::optional<double>>(n * n)};
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      if (s == t) { continue; }
      const auto path = layout.cell(names[s], names[t]);
      if (!std::filesystem::exists(path)) {
        run.failures.push_back({names[s], names[t], "missing cell file"});
        continue;
      }
      const auto j = nlohmann::json::parse(read_text_file(path));
      if (j.at("status") != "ok") {
        run.failures.push_back({names[s], names[t], j.value("error", std::string("failed"))});
        continue;
      }
      auto p = pair_from_json(j);
      run.variation.at(s, t) = p.variation_percent;
      run.transfer_accuracy.at(s, t) = p.transfer_accuracy;
      run.cells.emplace(std::make_pair(names[s], names[t]), std::move(p));
      ++run.cells_reused;
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Source selection

enum class Outcome { win, tie, loss, undecided };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::win: return "win";
    case Outcome::tie: return "tie";
    case Outcome::loss: return "loss";
    case Outcome::undecided: return "undecided";
  }
  return "undecided";
}

struct RankedChoice {
  std::string source;
  double distance;
  std::optional<double> accuracy;
};

struct SelectionRow {
  std::string target;
  /// The three nearest sources (fewer when N < 4), nearest first.
  std::vector<RankedChoice> nearest;
  /// Mean accuracy over uniformly drawn sources.
  std::optional<double> random_mean;
  /// Mean of the available column, the limit of random_mean.
  std::optional<double> column_mean;
  std::optional<Spread> spread;
  /// Nearest source against the random draw.
  Outcome outcome = Outcome::undecided;
};

struct SelectionReport {
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::vector<SelectionRow> rows;
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
};

/// Compare picking each target's nearest source against picking a source at
/// random (`iterations` uniform draws per target from one generator seeded with
/// `seed`, targets in matrix order).
inline SelectionReport compare_selection(const VariationMatrix& transfer_accuracy,
                                         const std::map<std::string, SourceRanking>& rankings, std::size_t iterations,
                                         std::uint64_t seed) {
  if (iterations == 0) { throw PreconditionError("random baseline needs at least one iteration"); }
  SelectionReport report;
  report.iterations = iterations;
  report.seed = seed;
  std::mt19937_64 rng(seed);
  const auto& names = transfer_accuracy.names;

  for (std::size_t t = 0; t < names.size(); ++t) {
    auto it = rankings.find(names[t]);
    if (it == rankings.end()) { throw LookupError("no ranking for target '" + names[t] + "'"); }
    SelectionRow row;
    row.target = names[t];

    std::vector<double> available;
    for (std::size_t s = 0; s < names.size(); ++s) {
      if (s != t && transfer_accuracy.at(s, t)) { available.push_back(*transfer_accuracy.at(s, t)); }
    }
    for (const auto& r : it->second.ranked) {
      if (row.nearest.size() == 3) { break; }
      std::optional<double> acc;
      for (std::size_t s = 0; s < names.size(); ++s) {
        if (names[s] == r.name && s != t) { acc = transfer_accuracy.at(s, t); }
      }
      row.nearest.push_back({r.name, r.distance, acc});
    }

    row.spread = spread(available);
    if (!available.empty()) {
      const double low = *std::min_element(available.begin(), available.end());
      std::vector<std::size_t> hits(available.size(), 0);
      std::uniform_int_distribution<std::size_t> pick(0, available.size() - 1);
      for (std::size_t i = 0; i < iterations; ++i) { ++hits[pick(rng)]; }
      // offsets from the column minimum keep an all-equal column exact
      double acc = 0.0;
      double col = 0.0;
      for (std::size_t k = 0; k < available.size(); ++k) {
        acc += static_cast<double>(hits[k]) * (available[k] - low);
        col += available[k] - low;
      }
      row.random_mean = low + acc / static_cast<double>(iterations);
      row.column_mean = low + col / static_cast<double>(available.size());
    }

    if (!row.nearest.empty() && row.nearest.front().accuracy && row.random_mean) {
      const double smart = *row.nearest.front().accuracy;
      row.outcome = smart > *row.random_mean ? Outcome::win : smart < *row.random_mean ? Outcome::loss : Outcome::tie;
    }
    switch (row.outcome) {
      case Outcome::win: ++report.wins; break;
      case Outcome::tie: ++report.ties; break;
      case Outcome::loss: ++report.losses; break;
      case Outcome::undecided: break;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::json selection_to_json(const SelectionReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j{{"target", row.target}, {"outcome", to_string(row.outcome)}};
    for (std::size_t k = 0; k < row.nearest.size(); ++k) {
      j["rank" + std::to_string(k + 1)] = {{"source", row.nearest[k].source},
                                           {"distance", row.nearest[k].distance},
                                           {"accuracy", opt(row.nearest[k].accuracy)}};
    }
    j["random_mean"] = opt(row.random_mean);
    j["column_mean"] = opt(row.column_mean);
    if (row.spread) {
      j["min"] = row.spread->min;
      j["median"] = row.spread->median;
      j["max"] = row.spread->max;
    }
    rows.push_back(std::move(j));
  }
  return {{"random_iterations", r.iterations},
          {"seed", r.seed},
          {"targets", rows},
          {"totals", {{"wins", r.wins}, {"ties", r.ties}, {"losses", r.losses}}}};
}

} // namespace tsct
