#include "pcpa/train.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pcpa {

using json = nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

json report_json(const EvalReport& r) {
  return {{"claim_f1", r.types.claim.f1},
          {"premise_f1", r.types.premise.f1},
          {"nonarg_f1", r.types.nonarg.f1},
          {"ipr_precision", r.ipr.precision},
          {"ipr_recall", r.ipr.recall},
          {"ipr_f1", r.ipr.f1},
          {"ipi_precision", r.ipi.precision},
          {"ipi_recall", r.ipi.recall},
          {"ipi_f1", r.ipi.f1}};
}

}  // namespace

std::vector<EpochRecord> train_model(PcpaModel& model, const Corpus& train, const Corpus* test,
                                     const TrainOptions& options) {
  if (train.empty()) throw std::invalid_argument("train_model: empty training corpus");
  const HyperParams& hyper = model.hyper();
  hyper.validate();

  std::mt19937_64 shuffle_rng(splitmix64(hyper.seed ^ 0x7d3a9cb6f2e15c44ull));
  std::mt19937_64 dropout_rng(splitmix64(hyper.seed ^ 0x1f9d8e3ab6c47250ull));
  AdamState adam({hyper.lr, hyper.adam_beta1, hyper.adam_beta2, hyper.adam_eps});

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochRecord> history;
  Tape tape;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      std::size_t j = static_cast<std::size_t>(shuffle_rng() % (i + 1));
      std::swap(order[i], order[j]);
    }
    double loss_total = 0.0;
    model.params().zero_grads();
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      const double batch_n = static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const AnnotatedThread& at = train[order[i]];
        tape.clear();
        Var loss = model.thread_loss(tape, at.thread, at.gold, /*train_mode=*/true,
                                     &dropout_rng);
        const double lv = tape.value(loss)[0];
        if (!std::isfinite(lv)) {
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / hyper.batch_size) +
                                   ", thread " + at.thread.id);
        }
        loss_total += lv;
        tape.backward(loss, 1.0 / batch_n);
      }
      if (hyper.grad_clip > 0.0) clip_gradients(model.params(), hyper.grad_clip);
      adam.step(model.params());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_total / static_cast<double>(train.size());
    if (options.eval_each_epoch) {
      rec.train_eval = evaluate_model(model, train);
      if (test && !test->empty()) rec.test_eval = evaluate_model(model, *test);
    }
    if (options.log) {
      *options.log << "epoch " << epoch << " loss " << rec.train_loss;
      if (rec.train_eval) {
        *options.log << " train_ipr_f1 " << rec.train_eval->ipr.f1 << " train_ipi_f1 "
                     << rec.train_eval->ipi.f1;
      }
      if (rec.test_eval) {
        *options.log << " test_ipr_f1 " << rec.test_eval->ipr.f1 << " test_ipi_f1 "
                     << rec.test_eval->ipi.f1;
      }
      *options.log << "\n";
    }
    history.push_back(std::move(rec));
  }
  return history;
}

std::string epoch_record_to_json(const EpochRecord& rec) {
  json j;
  j["epoch"] = rec.epoch;
  j["train_loss"] = rec.train_loss;
  if (rec.train_eval) j["train"] = report_json(*rec.train_eval);
  if (rec.test_eval) j["test"] = report_json(*rec.test_eval);
  return j.dump();
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0) {
    throw std::invalid_argument("split_corpus: fraction must be in [0,1]");
  }
  Corpus train, test;
  for (const AnnotatedThread& at : corpus) {
    const double u = static_cast<double>(splitmix64(fnv1a(at.thread.id) ^ seed) >> 11) *
                     0x1.0p-53;
    (u < train_fraction ? train : test).push_back(at);
  }
  return {std::move(train), std::move(test)};
}

std::vector<ThreadPrediction> predict_corpus(const PcpaModel& model, const Corpus& corpus) {
  std::vector<ThreadPrediction> out;
  out.reserve(corpus.size());
  for (const AnnotatedThread& at : corpus) out.push_back(model.predict(at.thread));
  return out;
}

EvalReport evaluate_model(const PcpaModel& model, const Corpus& corpus) {
  return evaluate_predictions(corpus, predict_corpus(model, corpus));
}

}  // namespace pcpa
