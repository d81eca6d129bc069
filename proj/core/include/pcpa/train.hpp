#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pcpa/metrics.hpp"
#include "pcpa/model.hpp"

namespace pcpa {

struct EpochRecord {
  int epoch = 0;           // 1-based
  double train_loss = 0;   // mean per-thread joint loss
  std::optional<EvalReport> train_eval;
  std::optional<EvalReport> test_eval;
};

struct TrainOptions {
  bool eval_each_epoch = true;  // task metrics on train (and test) per epoch
  std::ostream* log = nullptr;  // optional progress lines
};

/// Mini-batch training with Adam for the model's fixed epoch count, no early
/// stopping. Shuffling, initialization and dropout are all driven by
/// hyper.seed, so a given seed reproduces the checkpoint bit for bit.
/// Aborts with the epoch/batch on a non-finite loss.
std::vector<EpochRecord> train_model(PcpaModel& model, const Corpus& train,
                                     const Corpus* test, const TrainOptions& options = {});

std::string epoch_record_to_json(const EpochRecord& rec);

/// Stable 8:2-style split by thread-id hash mixed with the seed; a thread
/// lands in train iff its hash bucket falls below train_fraction.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t seed);

std::vector<ThreadPrediction> predict_corpus(const PcpaModel& model, const Corpus& corpus);
EvalReport evaluate_model(const PcpaModel& model, const Corpus& corpus);

}  // namespace pcpa
