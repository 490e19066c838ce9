// Acceptance checks, one per criterion. Usage: acceptance <1..9 | all>.
// Prints one PASS/FAIL line per criterion; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <tsct/tsct.hpp>

#include "oracles.hpp"

using namespace tsct;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

class Stopwatch {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// shared fixtures

std::vector<Dataset> suite7_datasets() {
  return {synthetic::sinusoids({"SineA", {2, 5}, 20, 20, 64, 0.3, 701}),
          synthetic::sinusoids({"SineB", {2, 6}, 20, 20, 64, 0.3, 702}),
          synthetic::sinusoids({"SineC", {3, 5, 8}, 20, 20, 64, 0.3, 703})};
}

const std::vector<std::uint64_t> suite7_seeds{0, 1, 2, 3, 4};
constexpr std::size_t suite7_epochs = 100;
constexpr double suite7_threshold = 0.95;

// ---------------------------------------------------------------------------
// 1

Verdict dtw_oracle() {
  Stopwatch clock;
  std::mt19937_64 rng(1);
  std::size_t mismatches = 0;
  for (int k = 0; k < 500; ++k) {
    auto a = oracle::random_series(rng, 1, 8, -2.0, 2.0);
    auto b = oracle::random_series(rng, 1, 8, -2.0, 2.0);
    if (dtw_distance(a, b) != oracle::dtw_bruteforce(a, b)) { ++mismatches; }
  }
  const double t = clock.seconds();
  return {mismatches == 0 && t < 10.0,
          "500 pairs, " + std::to_string(mismatches) + " mismatches, " + fmt(t) + " s (limit 10 s)"};
}

// ---------------------------------------------------------------------------
// 2

Verdict gradient_check(const fs::path& artefacts) {
  Stopwatch clock;
  std::mt19937_64 rng(2);
  double worst = 0.0;
  std::size_t redraws = 0;
  std::size_t checked = 0;
  std::ostringstream report;
  for (int k = 0; k < 20; ++k) {
    auto inst = oracle::gradient_instance(rng, 2 + k % 2, 4, 16);
    redraws += inst.redraws;
    double local = 0.0;
    for (const auto& c : oracle::finite_difference_check(inst.model, inst.batch)) {
      local = std::max(local, oracle::relative_error(c));
      ++checked;
    }
    worst = std::max(worst, local);
    report << k << ',' << format_double(local) << '\n';
    if (!artefacts.empty()) { write_file_atomic(artefacts / ("instance" + std::to_string(k) + ".fcn"), encode_model(inst.model)); }
  }
  if (!artefacts.empty()) { write_text_file(artefacts / "gradient_check.csv", report.str()); }
  const double t = clock.seconds();
  return {worst < 1e-4 && t < 60.0, "20 instances, " + std::to_string(checked) + " parameters, max relative error " +
                                        fmt(worst) + " (limit 1e-4), " + std::to_string(redraws) +
                                        " redraws for ReLU margin, " + fmt(t) + " s (limit 60 s)"};
}

// ---------------------------------------------------------------------------
// 3

Verdict dba_monotone(const fs::path& artefacts) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(2, 8);
  std::size_t violations = 0;
  std::size_t above_medoid = 0;
  std::size_t average_mismatch = 0;
  double largest_rise = 0.0;
  std::ostringstream report;
  for (int k = 0; k < 100; ++k) {
    std::vector<TimeSeries> set;
    const std::size_t n = size(rng);
    for (std::size_t i = 0; i < n; ++i) { set.push_back(oracle::random_series(rng, 1, 16, -2.0, 2.0)); }
    auto sum = [&](const TimeSeries& p) {
      double s = 0.0;
      for (const auto& x : set) { s += dtw_distance(p, x); }
      return s;
    };
    TimeSeries proto = set[medoid(set)];
    const double medoid_sum = sum(proto);
    double previous = medoid_sum;
    report << k << ',' << format_double(medoid_sum);
    for (int it = 0; it < 10; ++it) {
      proto = dba_iteration(proto, set);
      const double now = sum(proto);
      largest_rise = std::max(largest_rise, now - previous);
      if (now > previous + 1e-9) { ++violations; }
      previous = now;
      report << ',' << format_double(now);
    }
    if (previous > medoid_sum) { ++above_medoid; }
    if (!(dba_average(set) == proto)) { ++average_mismatch; }
    report << '\n';
    for (std::size_t t = 0; t < proto.size(); ++t) { report << (t ? "," : "") << format_double(proto[t]); }
    report << '\n';
  }
  if (!artefacts.empty()) { write_text_file(artefacts / "dba.csv", report.str()); }
  return {violations == 0 && above_medoid == 0 && average_mismatch == 0,
          "100 sets, " + std::to_string(violations) + " rises beyond 1e-9 (largest " + fmt(largest_rise) + "), " +
              std::to_string(above_medoid) + " final sums above the medoid, " + std::to_string(average_mismatch) +
              " dba_average mismatches"};
}

// ---------------------------------------------------------------------------
// 4

std::vector<double> naive_matrix(const std::vector<Dataset>& datasets,
                                 const std::function<double(const TimeSeries&, const TimeSeries&)>& dist) {
  std::vector<ClassPrototypes> reduced;
  for (const auto& d : datasets) { reduced.push_back(reduce_dataset(d)); }
  const std::size_t n = reduced.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) { continue; }
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [ci, pi] : reduced[i].prototypes) {
        for (const auto& [cj, pj] : reduced[j].prototypes) { best = std::min(best, dist(pi, pj)); }
      }
      m[i * n + j] = best;
    }
  }
  return m;
}

std::string structure_problems(const std::vector<Dataset>& datasets,
                               const std::function<double(const TimeSeries&, const TimeSeries&)>& dist) {
  auto m = similarity_matrix(datasets);
  std::string bad;
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    if (m.at(i, i) != 0.0) { bad += " diagonal"; }
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      if (m.at(i, j) != m.at(j, i)) { bad += " asymmetric"; }
    }
  }
  std::vector<Dataset> no_test;
  for (const auto& d : datasets) { no_test.push_back(d.without_test()); }
  if (!(similarity_matrix(no_test) == m)) { bad += " test-dependent"; }
  if (m.values != naive_matrix(datasets, dist)) { bad += " reference-mismatch"; }
  return bad;
}

Verdict matrix_structure() {
  std::mt19937_64 rng(4);
  std::size_t fixtures = 0;
  std::string problems;
  // short random fixtures checked against exhaustive path enumeration
  for (int f = 0; f < 20; ++f) {
    std::uniform_int_distribution<std::size_t> count(2, 4);
    std::uniform_int_distribution<std::size_t> classes(2, 3);
    std::uniform_int_distribution<std::size_t> per_class(1, 3);
    std::uniform_int_distribution<std::size_t> len(2, 6);
    std::vector<Dataset> ds;
    const std::size_t n = count(rng);
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t c = classes(rng);
      const std::size_t l = len(rng);
      Split train;
      Split test;
      for (std::size_t k = 0; k < c; ++k) {
        const std::size_t m = per_class(rng);
        for (std::size_t i = 0; i < m; ++i) { train.push_back({oracle::random_series(rng, l, l, -2, 2), k}); }
        test.push_back({oracle::random_series(rng, l, l, -2, 2), k});
      }
      ds.emplace_back("D" + std::to_string(d), std::move(train), std::move(test), c);
    }
    problems += structure_problems(ds, [](const TimeSeries& a, const TimeSeries& b) { return oracle::dtw_bruteforce(a, b); });
    ++fixtures;
  }
  // the end-to-end suite, full length
  problems += structure_problems(suite7_datasets(), [](const TimeSeries& a, const TimeSeries& b) { return dtw_distance(a, b); });
  ++fixtures;
  return {problems.empty(), std::to_string(fixtures) + " fixtures" + (problems.empty() ? ", all structural checks hold" : ":" + problems)};
}

// ---------------------------------------------------------------------------
// 5

Verdict head_swap() {
  auto source = suite7_datasets()[2];
  TrainConfig cfg;
  cfg.epochs = 1;
  auto model = train(build_model(source.class_count(), 5), source.train(), cfg).model;
  std::string problems;
  std::size_t swaps = 0;
  for (std::size_t c : {2u, 3u, 5u, 10u, 60u}) {
    for (std::uint64_t seed : {0u, 9u}) {
      auto swapped = swap_head(model, c, seed);
      auto before = detail::tensor_directory(model);
      auto after = detail::tensor_directory(swapped);
      for (std::size_t k = 0; k < 18; ++k) {
        const auto* a = before[k].matrix ? before[k].matrix->data() : before[k].vector->data();
        const auto* b = after[k].matrix ? after[k].matrix->data() : after[k].vector->data();
        if (std::memcmp(a, b, before[k].count() * sizeof(double)) != 0) { problems += " " + before[k].name; }
      }
      if (swapped.head_weight.rows() != 128 || swapped.head_weight.cols() != static_cast<Eigen::Index>(c)) {
        problems += " head-shape";
      }
      const double bound = std::sqrt(6.0 / (128.0 + static_cast<double>(c)));
      if (swapped.head_weight.cwiseAbs().maxCoeff() > bound) { problems += " head-bound"; }
      if (swapped.head_bias.size() != static_cast<Eigen::Index>(c)) { problems += " bias-shape"; }
      ++swaps;
    }
  }
  return {problems.empty(), std::to_string(swaps) + " swaps onto C in {2,3,5,10,60}" +
                                (problems.empty() ? ", 18 tensors bitwise equal, heads 128 x C inside the Glorot bound"
                                                  : ":" + problems)};
}

// ---------------------------------------------------------------------------
// 6

Verdict variation_examples() {
  const double up = accuracy_variation(0.746, 0.865);
  const double down = accuracy_variation(0.933, 0.167);
  // exact rationals: 100 * 119 / 746 and -100 * 766 / 933
  const bool ok = std::abs(up - 11900.0 / 746.0) < 1e-12 && std::abs(down + 76600.0 / 933.0) < 1e-12 &&
                  std::round(up) == 16.0 && std::round(down * 10.0) == -821.0;
  return {ok, "(0.746, 0.865) -> " + format_double(up) + " %, (0.933, 0.167) -> " + format_double(down) + " %"};
}

// ---------------------------------------------------------------------------
// 7

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

Verdict end_to_end(const fs::path& out, std::size_t workers) {
  Stopwatch clock;
  auto datasets = suite7_datasets();
  ExperimentConfig cfg;
  cfg.train.epochs = suite7_epochs;
  cfg.seeds = suite7_seeds;
  cfg.workers = workers;
  auto run = run_matrix(datasets, cfg, out);

  auto sim = similarity_matrix(datasets);
  write_text_file(out / "similarity.csv", matrix_to_csv(sim));
  std::map<std::string, SourceRanking> rankings;
  for (const auto& d : datasets) { rankings.emplace(d.name(), rank_sources(sim, d.name())); }
  auto report = compare_selection(run.transfer_accuracy, rankings, 1000, 0);
  write_text_file(out / "report.json", json_text(selection_to_json(report), 2) + "\n");

  const auto never = static_cast<double>(suite7_epochs + 1);
  auto reach = [&](const TrainHistory& h) {
    auto e = h.epochs_to_accuracy(suite7_threshold);
    return e ? static_cast<double>(*e) : never;
  };

  // (a) every scratch run reaches the threshold
  std::size_t scratch_runs = 0;
  std::size_t scratch_reached = 0;
  const ResultLayout layout{out};
  std::map<std::string, std::vector<double>> scratch_epochs;
  for (const auto& d : datasets) {
    for (auto seed : suite7_seeds) {
      const auto j = nlohmann::json::parse(read_text_file(layout.scratch(d.name(), seed)));
      const double e = reach(history_from_json(j.at("history")));
      scratch_epochs[d.name()].push_back(e);
      ++scratch_runs;
      if (e < never) { ++scratch_reached; }
    }
  }
  const bool a = run.failures.empty() && scratch_reached == scratch_runs;

  // (b) fine-tuning from the nearest source is no slower than scratch (median over seeds)
  bool b = run.failures.empty();
  std::string b_detail;
  for (const auto& d : datasets) {
    const auto& nearest = rankings.at(d.name()).ranked.front().name;
    auto cell = run.cells.find({nearest, d.name()});
    if (cell == run.cells.end()) {
      b = false;
      continue;
    }
    std::vector<double> tuned;
    for (const auto& r : cell->second.runs) { tuned.push_back(reach(r.transfer_history)); }
    const double mt = median(tuned);
    const double ms = median(scratch_epochs[d.name()]);
    if (!(mt <= ms)) { b = false; }
    b_detail += " " + d.name() + "<-" + nearest + " " + fmt(mt) + " vs " + fmt(ms) + ";";
  }

  // (c) outputs parse and are complete
  bool c = true;
  try {
    auto variation = variation_from_csv(read_text_file(layout.variation_csv()));
    auto accuracy = variation_from_csv(read_text_file(layout.transfer_csv()));
    c = variation.names == run.names && accuracy.names == run.names;
    for (std::size_t s = 0; s < run.names.size(); ++s) {
      for (std::size_t t = 0; t < run.names.size(); ++t) {
        if ((s == t) == accuracy.at(s, t).has_value()) { c = false; }
      }
    }
    const auto agg = read_text_file(layout.aggregate_csv());
    c = c && agg.rfind("target,min,median,max\n", 0) == 0 && std::count(agg.begin(), agg.end(), '\n') == 4;
    auto j = nlohmann::json::parse(read_text_file(out / "report.json"));
    const auto& totals = j.at("totals");
    c = c && j.at("targets").size() == 3 &&
        totals.at("wins").get<int>() + totals.at("ties").get<int>() + totals.at("losses").get<int>() == 3;
    for (const auto& row : j.at("targets")) { c = c && row.contains("rank1") && row.contains("rank2"); }
    matrix_from_csv(read_text_file(out / "similarity.csv"));
  } catch (const std::exception& e) {
    c = false;
    b_detail += std::string(" output error: ") + e.what();
  }

  const double t = clock.seconds();
  const bool in_time = t < 900.0;
  return {a && b && c && in_time,
          std::string("(a) ") + (a ? "pass" : "FAIL") + " " + std::to_string(scratch_reached) + "/" +
              std::to_string(scratch_runs) + " scratch runs reach " + fmt(suite7_threshold) + "; (b) " +
              (b ? "pass" : "FAIL") + " median epochs transfer vs scratch:" + b_detail + " (c) " + (c ? "pass" : "FAIL") +
              "; " + std::to_string(run.cells.size()) + " cells, " + fmt(t, 4) + " s (limit 900 s)"};
}

// ---------------------------------------------------------------------------
// 8

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) { files[fs::relative(e.path(), root).string()] = read_text_file(e.path()); }
  }
  return files;
}

Verdict determinism(const fs::path& work) {
  std::string detail;
  bool ok = true;
  std::size_t compared = 0;
  for (int pass = 0; pass < 2; ++pass) {
    const auto dir = work / ("run" + std::to_string(pass));
    fs::create_directories(dir / "c2");
    fs::create_directories(dir / "c3");
    gradient_check(dir / "c2");
    dba_monotone(dir / "c3");
    // the second pass uses a different worker count: results must not depend on the schedule
    end_to_end(dir / "c7", pass == 0 ? 1 : 0);
  }
  const auto first = snapshot(work / "run0");
  const auto second = snapshot(work / "run1");
  if (first.size() != second.size()) {
    ok = false;
    detail += " file sets differ;";
  }
  for (const auto& [name, bytes] : first) {
    auto it = second.find(name);
    if (it == second.end() || it->second != bytes) {
      ok = false;
      detail += " " + name;
    }
    ++compared;
  }
  std::size_t models = 0;
  for (const auto& [name, bytes] : first) { models += name.ends_with(".fcn"); }
  return {ok, std::to_string(compared) + " files (" + std::to_string(models) + " weight files) from criteria 2, 3, 7 " +
                  (ok ? "bitwise identical across two runs" : "differ:" + detail)};
}

// ---------------------------------------------------------------------------
// 9

Verdict serialization(const fs::path& work) {
  std::size_t values = 0;
  std::size_t beyond_ulp = 0;
  std::size_t samples = 0;
  std::size_t flipped = 0;
  std::size_t models = 0;
  TrainConfig cfg;
  cfg.epochs = suite7_epochs;
  for (const auto& d : suite7_datasets()) {
    for (auto seed : suite7_seeds) {
      auto model = train_scratch(d, cfg, seed).result.model;
      const auto path = work / (d.name() + std::to_string(seed) + ".fcn");
      save_model(model, path);
      auto loaded = load_model(path);
      auto a = detail::tensor_directory(model);
      auto b = detail::tensor_directory(loaded);
      for (std::size_t k = 0; k < a.size(); ++k) {
        const auto* x = a[k].matrix ? a[k].matrix->data() : a[k].vector->data();
        const auto* y = b[k].matrix ? b[k].matrix->data() : b[k].vector->data();
        for (std::size_t i = 0; i < a[k].count(); ++i) {
          // one binary32 ULP at the stored value
          const float f = static_cast<float>(x[i]);
          const double ulp = static_cast<double>(std::nextafter(std::abs(f), INFINITY)) - std::abs(f);
          if (!(std::abs(y[i] - x[i]) <= ulp)) { ++beyond_ulp; }
          ++values;
        }
      }
      const auto test = series_of(d.test());
      const auto p = predict(model, test);
      const auto q = predict(loaded, test);
      for (std::size_t i = 0; i < p.size(); ++i) { flipped += p[i] != q[i]; }
      samples += p.size();
      ++models;
    }
  }
  return {beyond_ulp == 0 && flipped == 0,
          std::to_string(models) + " models, " + std::to_string(values) + " values, " + std::to_string(beyond_ulp) +
              " beyond one binary32 ULP; " + std::to_string(flipped) + " of " + std::to_string(samples) +
              " test predictions changed"};
}

Verdict run_criterion(int n) {
  switch (n) {
    case 1: return dtw_oracle();
    case 2: return gradient_check({});
    case 3: return dba_monotone({});
    case 4: return matrix_structure();
    case 5: return head_swap();
    case 6: return variation_examples();
    case 7: {
      auto dir = oracle::scratch_dir("acceptance7");
      auto o = end_to_end(dir, 0);
      fs::remove_all(dir);
      return o;
    }
    case 8: {
      auto dir = oracle::scratch_dir("acceptance8");
      auto o = determinism(dir);
      fs::remove_all(dir);
      return o;
    }
    case 9: {
      auto dir = oracle::scratch_dir("acceptance9");
      auto o = serialization(dir);
      fs::remove_all(dir);
      return o;
    }
    default: return {false, "unknown criterion"};
  }
}

} // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "all") {
      for (int k = 1; k <= 9; ++k) { which.push_back(k); }
    } else {
      which.push_back(std::atoi(argv[i]));
    }
  }
  if (which.empty()) {
    std::cerr << "usage: acceptance <1..9 | all> ...\n";
    return 2;
  }
  bool all = true;
  for (int n : which) {
    Verdict o;
    try {
      o = run_criterion(n);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " | " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
