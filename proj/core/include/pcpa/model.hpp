#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pcpa/autodiff.hpp"
#include "pcpa/corpus.hpp"
#include "pcpa/optim.hpp"
#include "pcpa/prediction.hpp"
#include "pcpa/sequencing.hpp"

namespace pcpa {

struct HyperParams {
  // joint loss task weights; alpha, beta in [0,1] and alpha + beta < 1
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  int input_dim = 512;   // sentence embedding size
  int hidden_dim = 256;  // per-direction LSTM size; states are twice this
  double dropout = 0.9;  // drop probability on encoder inputs and outputs
  int batch_size = 16;
  int epochs = 50;
  std::uint64_t seed = 0;
  std::size_t vocab_cap = 5000;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global-norm clip, 0 disables
  bool constrained = true;       // false: both heads range over the whole thread
  bool use_separators = true;
  bool shared_separator = false;  // one separator symbol for both boundary kinds
  bool param_share = false;       // interaction head reuses the relation head's attention
  bool ipi_mask_noncallouts = false;  // drop self-labeled child sentences from the IPI loss

  void validate() const;
  SeparatorMode separator_mode() const;
};

/// One slot of a pointer distribution: the candidate sentence it denotes,
/// with the no-link (self) slot flagged.
struct SlotRef {
  int post = -1;
  int sentence = -1;
  bool self = false;
};

struct PointerDist {
  std::vector<SlotRef> slots;
  std::vector<double> probs;  // softmax output, sums to 1
};

/// Every distribution the model emits for one thread, evaluated greedily.
struct ThreadDistributions {
  std::vector<std::vector<PointerDist>> ipr;  // [post][sentence]
  struct IpiGroup {
    int parent = -1;
    int child = -1;
    std::vector<PointerDist> per_child_sentence;
  };
  std::vector<IpiGroup> ipi;  // one group per reply pair, in reply_pairs() order
  std::vector<std::vector<std::array<double, 3>>> type;  // [post][sentence]
};

/// Joint pointer model over linearized threads: a BiLSTM encoder shared by
/// three heads. The relation head scores, for each sentence, every sentence
/// of the same post (its own slot meaning "no link"); the interaction head
/// scores, for each sentence of a reply's child post, the parent's sentences
/// plus a trailing self slot; the type head is a 3-way softmax per sentence.
/// With hyper.constrained = false both pointer heads instead score every
/// sentence of the thread, and structurally invalid argmaxes are read as
/// self-pointers downstream.
class PcpaModel {
 public:
  PcpaModel(HyperParams hyper, Vocabulary vocab);

  /// Creates all parameters: uniform(-sqrt(1/fan_in), sqrt(1/fan_in)),
  /// zero biases except the LSTM forget gates at +1.
  void init_params(std::uint64_t seed);

  const HyperParams& hyper() const { return hyper_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Joint loss of one thread before the 1/N batch scaling:
  /// -alpha * L_rel - beta * L_int - (1 - alpha - beta) * L_type, where each
  /// L is the sum of gold-slot log-likelihoods. Unlinked sentences carry
  /// their self slot as gold. Threads without reply pairs contribute no
  /// interaction term. rng may be null when train_mode is off or dropout is 0.
  Var thread_loss(Tape& tape, const Thread& thread, const GoldAnnotation& gold,
                  bool train_mode, std::mt19937_64* rng);

  /// Same graph with explicit task weights, bypassing the alpha/beta
  /// constraint. Exists so tests can isolate one head's gradients.
  Var thread_loss_weighted(Tape& tape, const Thread& thread, const GoldAnnotation& gold,
                           double w_ipr, double w_ipi, double w_type, bool train_mode,
                           std::mt19937_64* rng);

  /// All distributions, eval mode (dropout off). Safe to call concurrently
  /// on a frozen model.
  ThreadDistributions distributions(const Thread& thread) const;

  /// Single-query variants. The interaction lookup throws when
  /// (parent, child) is not a reply pair of the thread.
  PointerDist ipr_distribution(const Thread& thread, int post, int sentence) const;
  PointerDist ipi_distribution(const Thread& thread, int parent, int child,
                               int sentence) const;
  std::array<double, 3> type_distribution(const Thread& thread, int post, int sentence) const;

  /// Greedy decode: argmax everywhere, ties to the lowest slot index, self
  /// slots and structurally invalid argmaxes become "no link".
  ThreadPrediction predict(const Thread& thread) const;

  /// Hidden states per sentence (eval mode); exposed for inspection.
  std::vector<std::vector<Tensor>> encode_states(const Thread& thread) const;

 private:
  struct Leaves;
  struct Graph;

  Graph build_graph(Tape& tape, const Thread& thread, bool train_mode, bool with_grad,
                    std::mt19937_64* rng) const;
  Var loss_on_graph(Tape& tape, const Graph& g, const Thread& thread,
                    const GoldAnnotation& gold, double w_ipr, double w_ipi, double w_type);

  HyperParams hyper_;
  Vocabulary vocab_;
  ParamStore params_;
};

}  // namespace pcpa
