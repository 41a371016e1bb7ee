#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hinge/config.hpp"
#include "hinge/trainer.hpp"

using namespace hinge;
using namespace hinge::test;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("trainer");

namespace {

struct TempDir {
  fs::path dir;
  explicit TempDir(const char* tag) {
    dir = fs::temp_directory_path() /
          (std::string("hinge_tr_") + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.heads = 2;
  cfg.model.paths = 4;
  cfg.metapaths = {"UI", "UITI"};
  cfg.model.cross = false;
  cfg.batch = 8;
  cfg.max_epochs = 3;
  cfg.patience = 25;
  cfg.seed = 7;
  cfg.threads = 1;
  cfg.topn = false;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("metapath validation at construction") {
  ToyData toy = make_toy(6, 8, 3, 40, 51);
  TrainConfig cfg = small_config();
  Model model(toy.g, cfg.model, cfg.seed);
  cfg.metapaths = {};
  CHECK_THROWS_AS(Trainer(model, cfg), ConfigError);

  cfg.metapaths = {"U"};  // one node is not a walk; rejected at parse time
  CHECK_THROWS_AS(Trainer(model, cfg), BrokenChainError);

  cfg.metapaths = {"UITI", "ITI"};  // anchors disagree
  CHECK_THROWS_AS(Trainer(model, cfg), ConfigError);

  cfg.metapaths = {"UI", "UIT"};  // reversed ends disagree
  CHECK_THROWS_AS(Trainer(model, cfg), ConfigError);

  cfg.metapaths = {"UI"};
  cfg.ns = true;
  cfg.ns_candidates = 2;  // pool smaller than cfg.model.paths
  CHECK_THROWS_AS(Trainer(model, cfg), ConfigError);
}

TEST_CASE("target templates are the reversed chains") {
  ToyData toy = make_toy(6, 8, 3, 0, 52);
  TrainConfig cfg = small_config();
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  REQUIRE(trainer.source_metapaths().size() == 2);
  CHECK(trainer.source_metapaths()[1].label(toy.g) == "UITI");
  CHECK(trainer.target_metapaths()[0].label(toy.g) == "IU");
  CHECK(trainer.target_metapaths()[1].label(toy.g) == "ITIU");
}

TEST_CASE("epoch resampling against the pinned evaluation stream") {
  ToyData toy = make_toy(6, 8, 3, 10, 53);
  TrainConfig cfg = small_config();
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  LabeledPair p{1, 3, 1.0f};
  PairPaths e0 = trainer.sample_for(p, 0);
  PairPaths e1 = trainer.sample_for(p, 1);
  CHECK(e0.source[0].ids != e1.source[0].ids);
  PairPaths ev1 = trainer.sample_for(p, Trainer::kEvalKey);
  PairPaths ev2 = trainer.sample_for(p, Trainer::kEvalKey);
  CHECK(ev1.source[0].ids == ev2.source[0].ids);
  CHECK(ev1.target[0].ids == ev2.target[0].ids);
  // target batches answer the reversed template: anchor first
  CHECK(ev1.target[0].at(0, 0) == p.target);
  CHECK(ev1.source[0].at(0, 0) == p.source);
}

TEST_CASE("frozen validation accuracy stops training at the patience wall") {
  ToyData toy = make_toy(8, 10, 3, 40, 54);
  TrainConfig cfg = small_config();
  cfg.lr = 0.0f;  // nothing ever improves
  cfg.max_epochs = 100;
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  TrainResult res = trainer.run(toy.pairs);
  CHECK(res.stopped_early);
  CHECK(res.epochs_run == 26);  // epoch 1 sets the best, then 25 barren epochs
  CHECK(res.best_epoch == 1);
}

TEST_CASE("training run writes aligned history and artifacts") {
  ToyData toy = make_toy(8, 10, 3, 50, 55);
  TempDir tmp("hist");
  TrainConfig cfg = small_config();
  cfg.topn = true;
  cfg.topn_negatives = 5;
  cfg.out_dir = tmp.dir.string();
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  std::ostringstream log;
  TrainResult res = trainer.run(toy.pairs, &log);

  CHECK(res.epochs_run == 3);
  // one train plus one val row per epoch, then the test row
  REQUIRE(res.history.size() == 2 * res.epochs_run + 1);
  for (uint32_t e = 0; e < res.epochs_run; ++e) {
    CHECK(res.history[2 * e].split == "train");
    CHECK(res.history[2 * e].epoch == e + 1);
    CHECK(res.history[2 * e + 1].split == "val");
  }
  const EpochRow& last = res.history.back();
  CHECK(last.split == "test");
  CHECK(last.epoch == res.best_epoch);
  CHECK(last.has_topn);
  CHECK(res.test_topn.users > 0);
  CHECK(res.test_topn.ndcg5 >= 0.0);
  CHECK(res.test_topn.ndcg5 <= 1.0);
  CHECK(log.str().find("epoch 1") != std::string::npos);

  CHECK(slurp(tmp.file("history.csv")) == history_csv(res.history));
  Config manifest = Config::parse_file(tmp.file("manifest.txt"));
  CHECK(manifest.get_int("seed", -1) == 7);
  CHECK(manifest.get_int("embed_dim", -1) == 8);
  CHECK(manifest.get_list("metapaths") == std::vector<std::string>{"UI", "UITI"});
  CHECK(fs::exists(tmp.file("model.ckpt")));

  // split respects the configured fractions
  size_t n = toy.pairs.size();
  CHECK(res.splits.train.size() == static_cast<size_t>(std::llround(n * 0.6)));
  CHECK(res.splits.val.size() == static_cast<size_t>(std::llround(n * 0.2)));
  CHECK(n - res.splits.train.size() - res.splits.val.size() == res.splits.test.size());
}

TEST_CASE("identical seeds reproduce byte-identical artifacts") {
  ToyData toy = make_toy(8, 10, 3, 40, 56);
  auto run_once = [&](const std::string& dir) {
    TrainConfig cfg = small_config();
    cfg.max_epochs = 2;
    cfg.out_dir = dir;
    Model model(toy.g, cfg.model, cfg.seed);
    Trainer trainer(model, cfg);
    trainer.run(toy.pairs);
  };
  TempDir a("det_a"), b("det_b");
  run_once(a.dir.string());
  run_once(b.dir.string());
  CHECK(slurp(a.file("history.csv")) == slurp(b.file("history.csv")));
  CHECK(slurp(a.file("model.ckpt")) == slurp(b.file("model.ckpt")));
  CHECK(slurp(a.file("model.ckpt")).size() > 100);
}

TEST_CASE("evaluation is stable across repeated passes") {
  ToyData toy = make_toy(8, 10, 3, 30, 57);
  TrainConfig cfg = small_config();
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  auto p1 = trainer.predict_all(toy.pairs);
  auto p2 = trainer.predict_all(toy.pairs);
  CHECK(p1 == p2);
  CtrMetrics m1 = trainer.evaluate(toy.pairs);
  CtrMetrics m2 = trainer.evaluate(toy.pairs);
  CHECK(m1.acc == m2.acc);
  CHECK(m1.logloss == m2.logloss);
  CHECK(m1.tp + m1.fp + m1.fn + m1.tn == toy.pairs.size());

  size_t seen = 0;
  trainer.evaluate(toy.pairs, [&](size_t idx, const EvalRecord& rec) {
    CHECK(idx == seen++);
    CHECK(rec.prob >= kProbFloor);
    CHECK(rec.prob <= kProbCeil);
    CHECK(rec.beta.size() > 0);
    CHECK(rec.alphas.size() == 2);  // one per combination
  });
  CHECK(seen == toy.pairs.size());
}

TEST_CASE("selection pipeline trains end to end") {
  ToyData toy = make_toy(8, 10, 4, 40, 58);
  TempDir tmp("ns");
  TrainConfig cfg = small_config();
  cfg.max_epochs = 2;
  cfg.ns = true;
  cfg.ns_candidates = 8;
  cfg.ns_filter_epochs = 1;
  cfg.out_dir = tmp.dir.string();
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  REQUIRE(trainer.filter() != nullptr);
  TrainResult res = trainer.run(toy.pairs);
  CHECK(res.epochs_run == 2);
  CHECK(fs::exists(tmp.file("filter.ckpt")));

  // the survivor batches keep the configured path budget
  PairPaths in = trainer.sample_for(toy.pairs[0], Trainer::kEvalKey);
  for (const auto& b : in.source) CHECK(b.rows == cfg.model.paths);
  for (const auto& b : in.target) CHECK(b.rows == cfg.model.paths);
}

TEST_CASE("mixed-length templates flow through the cross product") {
  ToyData toy = make_toy(8, 10, 3, 30, 59);
  TrainConfig cfg = small_config();
  cfg.metapaths = {"UI", "UITI"};
  cfg.model.cross = true;  // every off-diagonal combination mixes 2-node with 4-node walks
  cfg.max_epochs = 2;
  Model model(toy.g, cfg.model, cfg.seed);
  Trainer trainer(model, cfg);
  TrainResult res = trainer.run(toy.pairs);
  CHECK(res.epochs_run == 2);
  CHECK(res.history.back().split == "test");
}

TEST_SUITE_END();
