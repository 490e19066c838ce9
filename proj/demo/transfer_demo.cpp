// Pick a source dataset by DTW similarity, pre-train on it, then fine-tune on
// the target and compare against training from scratch.
//
//   transfer_demo [epochs]        (default 60)

#include <algorithm>
#include <cstdlib>
#include <iostream>

#include <tsct/tsct.hpp>

int main(int argc, char** argv) {
  using namespace tsct;
  const std::size_t epochs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 60;

  std::vector<Dataset> pool{synthetic::sinusoids({"Slow", {1, 3}, 20, 20, 64, 0.3, 11}),
                            synthetic::sinusoids({"Fast", {6, 9}, 20, 20, 64, 0.3, 12}),
                            synthetic::sinusoids({"Mixed", {2, 4, 7}, 20, 20, 64, 0.3, 13})};
  const Dataset target = synthetic::sinusoids({"Target", {1, 4}, 20, 20, 64, 0.3, 14});

  auto everything = pool;
  everything.push_back(target);
  const auto sim = similarity_matrix(everything);
  std::cout << matrix_to_csv(sim) << '\n';

  const auto ranking = rank_sources(sim, target.name());
  for (std::size_t k = 0; k < ranking.ranked.size(); ++k) {
    std::cout << "rank " << k + 1 << ": " << ranking.ranked[k].name << " (distance " << ranking.ranked[k].distance << ")\n";
  }
  const auto& nearest = ranking.ranked.front().name;
  const Dataset& source = *std::find_if(pool.begin(), pool.end(), [&](const Dataset& d) { return d.name() == nearest; });

  TrainConfig cfg;
  cfg.epochs = epochs;
  const auto scratch = train_scratch(target, cfg, 0);
  const auto pretrained = train_scratch(source, cfg, 0);
  const auto tuned = fine_tune(pretrained.result.model, target, cfg, 0);

  auto reach = [](const TrainHistory& h) {
    auto e = h.epochs_to_accuracy(0.95);
    return e ? std::to_string(*e) : std::string("never");
  };
  std::cout << "\nscratch:  test accuracy " << scratch.test_accuracy << ", 95% train accuracy at epoch "
            << reach(scratch.result.history) << '\n';
  std::cout << "transfer: test accuracy " << evaluate(tuned.model, target.test()) << ", 95% train accuracy at epoch "
            << reach(tuned.history) << " (source " << source.name() << ")\n";
  return 0;
}
