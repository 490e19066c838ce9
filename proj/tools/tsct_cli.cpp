// tsct: command-line front end for training, transfer, similarity and the
// pairwise transfer matrix.

#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <tsct/tsct.hpp>

namespace {

struct TrainOptions {
  std::size_t epochs = 2000;
  std::size_t batch = 16;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

void add_train_options(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--epochs", o.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--batch", o.batch, "mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed for initialisation and shuffling")->capture_default_str();
}

tsct::TrainConfig to_config(const TrainOptions& o) {
  tsct::TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch;
  c.learning_rate = o.lr;
  c.seed = o.seed;
  return c;
}

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

std::vector<tsct::Dataset> load_all(const std::string& dir, const std::vector<std::string>& names) {
  std::vector<tsct::Dataset> out;
  for (const auto& n : names) { out.push_back(tsct::ucr::load_named_dataset(dir, n)); }
  return out;
}

nlohmann::json summary(const std::string& dataset, const tsct::TrainResult& r, double test_accuracy) {
  nlohmann::json j{{"dataset", dataset}, {"epochs", r.history.epochs.size()}, {"best_epoch", r.best_epoch},
                   {"test_accuracy", test_accuracy}};
  if (r.best_epoch > 0) {
    j["train_loss"] = r.history.epochs[r.best_epoch - 1].loss;
    j["train_accuracy"] = r.history.epochs[r.best_epoch - 1].accuracy;
  }
  return j;
}

void log_line(const std::string& msg) { std::cerr << msg << std::endl; }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer learning for time series classification"};
  app.require_subcommand(1);

  // train
  std::string train_name;
  std::string train_data;
  std::string train_out = "model.fcn";
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "train an FCN from scratch on one dataset");
  train_cmd->add_option("name", train_name, "dataset name")->required();
  train_cmd->add_option("--data", train_data, "UCR data directory")->required();
  train_cmd->add_option("--out", train_out, "model file to write")->capture_default_str();
  add_train_options(train_cmd, train_opts);

  // transfer
  std::string tr_source;
  std::string tr_target;
  std::string tr_data;
  std::string tr_out = "model2.fcn";
  TrainOptions tr_opts;
  auto* transfer_cmd = app.add_subcommand("transfer", "swap the head of a pre-trained model and fine-tune it");
  transfer_cmd->add_option("--source", tr_source, "pre-trained model file")->required();
  transfer_cmd->add_option("--target", tr_target, "target dataset name")->required();
  transfer_cmd->add_option("--data", tr_data, "UCR data directory")->required();
  transfer_cmd->add_option("--out", tr_out, "model file to write")->capture_default_str();
  add_train_options(transfer_cmd, tr_opts);

  // similarity
  std::string sim_data;
  std::string sim_names;
  std::string sim_out = "matrix.csv";
  std::size_t sim_iters = 10;
  std::size_t sim_workers = 1;
  auto* sim_cmd = app.add_subcommand("similarity", "DTW distance matrix between datasets");
  sim_cmd->add_option("--data", sim_data, "UCR data directory")->required();
  sim_cmd->add_option("--datasets", sim_names, "comma-separated dataset names")->required();
  sim_cmd->add_option("--out", sim_out, "CSV file to write")->capture_default_str();
  sim_cmd->add_option("--dba-iters", sim_iters, "DBA refinement iterations")->capture_default_str();
  sim_cmd->add_option("--workers", sim_workers, "threads (0 = all cores)")->capture_default_str();

  // rank
  std::string rank_matrix;
  std::string rank_target;
  std::string rank_out = "ranking.json";
  auto* rank_cmd = app.add_subcommand("rank", "order candidate sources for a target");
  rank_cmd->add_option("--matrix", rank_matrix, "similarity matrix CSV")->required();
  rank_cmd->add_option("--target", rank_target, "target dataset name")->required();
  rank_cmd->add_option("--out", rank_out, "JSON file to write")->capture_default_str();

  // matrix
  std::string mx_data;
  std::string mx_names;
  std::string mx_out;
  std::size_t mx_workers = 1;
  std::size_t mx_seeds = 1;
  TrainOptions mx_opts;
  auto* matrix_cmd = app.add_subcommand("matrix", "run every ordered (source, target) transfer experiment");
  matrix_cmd->add_option("--data", mx_data, "UCR data directory")->required();
  matrix_cmd->add_option("--datasets", mx_names, "comma-separated dataset names")->required();
  matrix_cmd->add_option("--out-dir", mx_out, "result directory (resumable)")->required();
  matrix_cmd->add_option("--workers", mx_workers, "threads (0 = all cores)")->capture_default_str();
  matrix_cmd->add_option("--seeds", mx_seeds, "seeds per cell, starting at --seed")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_train_options(matrix_cmd, mx_opts);

  // report
  std::string rep_results;
  std::string rep_matrix;
  std::string rep_out = "report.json";
  std::size_t rep_iters = 1000;
  std::uint64_t rep_seed = 0;
  auto* report_cmd = app.add_subcommand("report", "nearest-source selection against random selection");
  report_cmd->add_option("--results", rep_results, "result directory of a matrix run")->required();
  report_cmd->add_option("--matrix", rep_matrix, "similarity matrix CSV")->required();
  report_cmd->add_option("--out", rep_out, "JSON file to write")->capture_default_str();
  report_cmd->add_option("--random-iters", rep_iters, "random draws per target")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  report_cmd->add_option("--seed", rep_seed, "seed of the random draws")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      auto ds = tsct::ucr::load_named_dataset(train_data, train_name);
      auto run = tsct::train_scratch(ds, to_config(train_opts), train_opts.seed);
      tsct::save_model(run.result.model, train_out);
      std::cout << tsct::json_text(summary(ds.name(), run.result, run.test_accuracy)) << '\n';
    } else if (*transfer_cmd) {
      auto pre = tsct::load_model(tr_source);
      auto ds = tsct::ucr::load_named_dataset(tr_data, tr_target);
      auto r = tsct::fine_tune(pre, ds, to_config(tr_opts), tr_opts.seed);
      const double acc = tsct::evaluate(r.model, ds.test());
      tsct::save_model(r.model, tr_out);
      std::cout << tsct::json_text(summary(ds.name(), r, acc)) << '\n';
    } else if (*sim_cmd) {
      auto datasets = load_all(sim_data, split_names(sim_names));
      auto m = tsct::similarity_matrix(datasets, tsct::DbaConfig{sim_iters, sim_workers});
      tsct::write_text_file(sim_out, tsct::matrix_to_csv(m));
    } else if (*rank_cmd) {
      auto m = tsct::matrix_from_csv(tsct::read_text_file(rank_matrix));
      auto r = tsct::rank_sources(m, rank_target);
      tsct::write_text_file(rank_out, tsct::json_text(tsct::ranking_to_json(r), 2) + "\n");
    } else if (*matrix_cmd) {
      tsct::ExperimentConfig cfg;
      cfg.train = to_config(mx_opts);
      cfg.seeds.clear();
      for (std::size_t k = 0; k < mx_seeds; ++k) { cfg.seeds.push_back(mx_opts.seed + k); }
      cfg.workers = mx_workers;
      cfg.log = log_line;
      auto run = tsct::run_matrix(load_all(mx_data, split_names(mx_names)), cfg, mx_out);
      std::cerr << run.cells.size() << " cells ok (" << run.cells_computed << " computed, " << run.cells_reused
                << " reused), " << run.failures.size() << " failed" << std::endl;
      for (const auto& f : run.failures) { std::cerr << "failed " << f.source << " -> " << f.target << ": " << f.error << '\n'; }
      if (!run.failures.empty()) { return 3; }
    } else if (*report_cmd) {
      auto sim = tsct::matrix_from_csv(tsct::read_text_file(rep_matrix));
      auto acc = tsct::variation_from_csv(tsct::read_text_file(tsct::ResultLayout{rep_results}.transfer_csv()));
      if (std::set(acc.names.begin(), acc.names.end()) != std::set(sim.names.begin(), sim.names.end())) {
        throw tsct::LookupError("similarity matrix and results cover different datasets");
      }
      std::map<std::string, tsct::SourceRanking> rankings;
      for (const auto& n : acc.names) { rankings.emplace(n, tsct::rank_sources(sim, n)); }
      auto report = tsct::compare_selection(acc, rankings, rep_iters, rep_seed);
      tsct::write_text_file(rep_out, tsct::json_text(tsct::selection_to_json(report), 2) + "\n");
      std::cerr << report.wins << " wins, " << report.ties << " ties, " << report.losses << " losses" << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
