#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "pcpa/checkpoint.hpp"
#include "pcpa/synthetic.hpp"
#include "pcpa/train.hpp"
#include "helpers.hpp"

using namespace pcpa;

namespace {

HyperParams train_hyper() {
  HyperParams hp;
  hp.input_dim = 16;
  hp.hidden_dim = 8;
  hp.dropout = 0.0;
  hp.vocab_cap = 400;
  hp.batch_size = 4;
  hp.epochs = 6;
  hp.lr = 3e-3;
  hp.seed = 5;
  return hp;
}

PcpaModel fresh_model(const Corpus& corpus, const HyperParams& hp) {
  Vocabulary vocab = Vocabulary::build(corpus, hp.vocab_cap);
  PcpaModel m(hp, vocab);
  m.init_params(hp.seed);
  return m;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("identical seeds give identical checkpoints") {
  Corpus corpus = generate_synthetic(test::tiny_generator(8), 3);
  HyperParams hp = train_hyper();
  hp.epochs = 3;

  TrainOptions opts;
  opts.eval_each_epoch = false;

  PcpaModel m1 = fresh_model(corpus, hp);
  train_model(m1, corpus, nullptr, opts);
  PcpaModel m2 = fresh_model(corpus, hp);
  train_model(m2, corpus, nullptr, opts);

  save_checkpoint("/tmp/pcpa_test_d1.ckpt", m1);
  save_checkpoint("/tmp/pcpa_test_d2.ckpt", m2);
  CHECK(file_bytes("/tmp/pcpa_test_d1.ckpt") == file_bytes("/tmp/pcpa_test_d2.ckpt"));
  std::remove("/tmp/pcpa_test_d1.ckpt");
  std::remove("/tmp/pcpa_test_d2.ckpt");

  // a different seed moves the parameters
  hp.seed = 6;
  PcpaModel m3 = fresh_model(corpus, hp);
  train_model(m3, corpus, nullptr, opts);
  save_checkpoint("/tmp/pcpa_test_d3.ckpt", m3);
  save_checkpoint("/tmp/pcpa_test_d1.ckpt", m1);
  CHECK(file_bytes("/tmp/pcpa_test_d1.ckpt") != file_bytes("/tmp/pcpa_test_d3.ckpt"));
  std::remove("/tmp/pcpa_test_d1.ckpt");
  std::remove("/tmp/pcpa_test_d3.ckpt");
}

TEST_CASE("training loss trends downward on a fixed corpus") {
  Corpus corpus = generate_synthetic(test::tiny_generator(8), 17);
  HyperParams hp = train_hyper();
  hp.epochs = 12;
  PcpaModel m = fresh_model(corpus, hp);
  TrainOptions opts;
  opts.eval_each_epoch = false;
  std::vector<EpochRecord> history = train_model(m, corpus, nullptr, opts);
  REQUIRE(history.size() == 12);
  // window means: last third clearly below the first third
  double early = 0, late = 0;
  for (int i = 0; i < 4; ++i) early += history[i].train_loss;
  for (int i = 8; i < 12; ++i) late += history[i].train_loss;
  CHECK(late < early);
  CHECK(history.front().epoch == 1);
  CHECK(history.back().epoch == 12);
}

TEST_CASE("dropout training stays finite and deterministic") {
  Corpus corpus = generate_synthetic(test::tiny_generator(6), 19);
  HyperParams hp = train_hyper();
  hp.dropout = 0.5;
  hp.epochs = 2;
  PcpaModel m1 = fresh_model(corpus, hp);
  PcpaModel m2 = fresh_model(corpus, hp);
  TrainOptions opts;
  opts.eval_each_epoch = false;
  auto h1 = train_model(m1, corpus, nullptr, opts);
  auto h2 = train_model(m2, corpus, nullptr, opts);
  CHECK(h1.back().train_loss == h2.back().train_loss);
  CHECK(std::isfinite(h1.back().train_loss));
}

TEST_CASE("history records carry train and test task metrics") {
  Corpus corpus = generate_synthetic(test::tiny_generator(10), 23);
  auto [train_set, test_set] = split_corpus(corpus, 0.7, 5);
  REQUIRE(!train_set.empty());
  REQUIRE(!test_set.empty());
  HyperParams hp = train_hyper();
  hp.epochs = 2;
  PcpaModel m = fresh_model(train_set, hp);
  std::vector<EpochRecord> history = train_model(m, train_set, &test_set);
  REQUIRE(history.size() == 2);
  REQUIRE(history[0].train_eval.has_value());
  REQUIRE(history[0].test_eval.has_value());
  std::string line = epoch_record_to_json(history[0]);
  CHECK(line.find("\"train_loss\"") != std::string::npos);
  CHECK(line.find("\"ipr_f1\"") != std::string::npos);
  CHECK(line.find("\"test\"") != std::string::npos);
}

TEST_CASE("split is stable, seed-dependent, and roughly proportional") {
  Corpus corpus = generate_synthetic(test::tiny_generator(300), 29);
  auto [a_train, a_test] = split_corpus(corpus, 0.8, 1);
  auto [b_train, b_test] = split_corpus(corpus, 0.8, 1);
  CHECK(a_train.size() == b_train.size());
  CHECK(a_train.size() + a_test.size() == corpus.size());
  // same seed, same membership
  for (std::size_t i = 0; i < a_train.size(); ++i) {
    CHECK(a_train[i].thread.id == b_train[i].thread.id);
  }
  double frac = static_cast<double>(a_train.size()) / static_cast<double>(corpus.size());
  CHECK(frac > 0.7);
  CHECK(frac < 0.9);
  auto [c_train, c_test] = split_corpus(corpus, 0.8, 2);
  std::set<std::string> a_ids, c_ids;
  for (const auto& at : a_train) a_ids.insert(at.thread.id);
  for (const auto& at : c_train) c_ids.insert(at.thread.id);
  CHECK(a_ids != c_ids);  // a different seed reshuffles membership
}

TEST_CASE("training rejects an empty corpus") {
  Corpus corpus = generate_synthetic(test::tiny_generator(2), 1);
  HyperParams hp = train_hyper();
  PcpaModel m = fresh_model(corpus, hp);
  CHECK_THROWS_AS(train_model(m, Corpus{}, nullptr), std::invalid_argument);
}
