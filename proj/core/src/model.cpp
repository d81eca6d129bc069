#include "pcpa/model.hpp"

#include <map>
#include <stdexcept>

namespace pcpa {

void HyperParams::validate() const {
  if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0 || alpha + beta >= 1.0) {
    throw std::invalid_argument(
        "hyper: need alpha, beta in [0,1] with alpha + beta < 1");
  }
  if (input_dim <= 0 || hidden_dim <= 0) throw std::invalid_argument("hyper: bad dimensions");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("hyper: dropout in [0,1)");
  if (batch_size < 1) throw std::invalid_argument("hyper: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("hyper: epochs must be >= 0");
  if (vocab_cap < 1) throw std::invalid_argument("hyper: vocab_cap must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("hyper: lr must be positive");
}

SeparatorMode HyperParams::separator_mode() const {
  if (!use_separators) return SeparatorMode::None;
  return shared_separator ? SeparatorMode::Shared : SeparatorMode::Distinct;
}

PcpaModel::PcpaModel(HyperParams hyper, Vocabulary vocab)
    : hyper_(std::move(hyper)), vocab_(std::move(vocab)) {
  hyper_.validate();
}

void PcpaModel::init_params(std::uint64_t seed) {
  params_ = ParamStore();
  std::mt19937_64 rng(seed ^ 0x8f1bbcdcbfa53e0bull);
  const std::size_t V = vocab_.size();
  const std::size_t d = static_cast<std::size_t>(hyper_.input_dim);
  const std::size_t H = static_cast<std::size_t>(hyper_.hidden_dim);
  const std::size_t S = 2 * H;

  params_.create("embed.tokens", uniform_init({V, d}, V, rng));
  if (hyper_.shared_separator) {
    params_.create("embed.sep", uniform_init({d}, d, rng));
  } else {
    params_.create("embed.sep_depth", uniform_init({d}, d, rng));
    params_.create("embed.sep_post", uniform_init({d}, d, rng));
  }
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string base = std::string("enc.") + dir + ".";
    for (const char* gate : {"i", "f", "o", "g"}) {
      params_.create(base + "w_x" + gate, uniform_init({H, d}, d, rng));
      params_.create(base + "w_h" + gate, uniform_init({H, H}, H, rng));
      // forget bias starts at +1 so memory survives early training
      params_.create(base + "b_" + gate,
                     std::string(gate) == "f" ? Tensor::full({H}, 1.0) : Tensor({H}));
    }
  }
  params_.create("ipr.w1", uniform_init({S, S}, S, rng));
  params_.create("ipr.w2", uniform_init({S, S}, S, rng));
  params_.create("ipr.v1", uniform_init({S}, S, rng));
  if (!hyper_.param_share) {
    params_.create("ipi.w3", uniform_init({S, S}, S, rng));
    params_.create("ipi.w4", uniform_init({S, S}, S, rng));
    params_.create("ipi.v2", uniform_init({S}, S, rng));
  }
  params_.create("type.w", uniform_init({3, S}, S, rng));
  params_.create("type.b", Tensor({3}));
}

struct PcpaModel::Leaves {
  Var tokens, sep_depth, sep_post;
  LstmVars fwd, bwd;
  Var w1, w2, v1;
  Var w3, w4, v2;
  Var wt, bt;
};

struct PcpaModel::Graph {
  LinearizedThread lin;
  std::vector<std::vector<Var>> sent;  // [post][sentence] -> 2H state
  std::vector<Var> flat;               // flat ordinal -> state
  Leaves leaves;
};

PcpaModel::Graph PcpaModel::build_graph(Tape& tape, const Thread& thread, bool train_mode,
                                        bool with_grad, std::mt19937_64* rng) const {
  // with_grad only flows in from the non-const loss entry points
  auto leaf = [&](const std::string& name) -> Var {
    if (with_grad) return tape.param(const_cast<ParamStore&>(params_).get(name));
    return tape.frozen_param(params_.get(name));
  };

  Graph g;
  g.leaves.tokens = leaf("embed.tokens");
  if (hyper_.shared_separator) {
    g.leaves.sep_depth = g.leaves.sep_post = leaf("embed.sep");
  } else if (hyper_.use_separators) {
    g.leaves.sep_depth = leaf("embed.sep_depth");
    g.leaves.sep_post = leaf("embed.sep_post");
  } else {
    g.leaves.sep_depth = g.leaves.sep_post = g.leaves.tokens;  // never placed in the sequence
  }
  auto lstm_leaves = [&](const std::string& base) {
    LstmVars v;
    v.w_xi = leaf(base + "w_xi");
    v.w_hi = leaf(base + "w_hi");
    v.b_i = leaf(base + "b_i");
    v.w_xf = leaf(base + "w_xf");
    v.w_hf = leaf(base + "w_hf");
    v.b_f = leaf(base + "b_f");
    v.w_xo = leaf(base + "w_xo");
    v.w_ho = leaf(base + "w_ho");
    v.b_o = leaf(base + "b_o");
    v.w_xg = leaf(base + "w_xg");
    v.w_hg = leaf(base + "w_hg");
    v.b_g = leaf(base + "b_g");
    return v;
  };
  g.leaves.fwd = lstm_leaves("enc.fwd.");
  g.leaves.bwd = lstm_leaves("enc.bwd.");
  g.leaves.w1 = leaf("ipr.w1");
  g.leaves.w2 = leaf("ipr.w2");
  g.leaves.v1 = leaf("ipr.v1");
  if (hyper_.param_share) {
    g.leaves.w3 = g.leaves.w1;
    g.leaves.w4 = g.leaves.w2;
    g.leaves.v2 = g.leaves.v1;
  } else {
    g.leaves.w3 = leaf("ipi.w3");
    g.leaves.w4 = leaf("ipi.w4");
    g.leaves.v2 = leaf("ipi.v2");
  }
  g.leaves.wt = leaf("type.w");
  g.leaves.bt = leaf("type.b");

  g.lin = linearize(thread, hyper_.separator_mode());
  std::vector<Var> inputs = embed_items(tape, g.lin, thread, vocab_, g.leaves.tokens,
                                        g.leaves.sep_depth, g.leaves.sep_post);
  const bool drop = train_mode && hyper_.dropout > 0.0;
  if (drop) {
    if (!rng) throw std::invalid_argument("train-mode dropout needs an rng");
    for (Var& v : inputs) v = tape.dropout(v, hyper_.dropout, *rng, true);
  }
  std::vector<Var> states = bilstm_encode(tape, inputs, g.leaves.fwd, g.leaves.bwd,
                                          static_cast<std::size_t>(hyper_.hidden_dim));
  if (drop) {
    for (Var& v : states) v = tape.dropout(v, hyper_.dropout, *rng, true);
  }

  g.sent.resize(thread.posts.size());
  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    g.sent[j].resize(thread.posts[j].sentences.size());
    for (std::size_t k = 0; k < thread.posts[j].sentences.size(); ++k) {
      g.sent[j][k] = states[g.lin.item_of[j][k]];
    }
  }
  g.flat.resize(g.lin.sentence_at.size());
  for (std::size_t f = 0; f < g.lin.sentence_at.size(); ++f) {
    auto [j, k] = g.lin.sentence_at[f];
    g.flat[f] = g.sent[j][k];
  }
  return g;
}

namespace {

// v . tanh(Wc e_candidate + Wq e_query), the pointer attention score
Var att_score(Tape& t, Var v, Var wc_cand, Var wq_query) {
  return t.sum(t.mul(v, t.tanh(t.add(wc_cand, wq_query))));
}

struct ScoreBlock {
  std::vector<Var> scores;
  std::vector<SlotRef> slots;
};

// interaction blocks: one per reply pair
struct IpiBlockGroup {
  int parent = -1;
  int child = -1;
  std::vector<ScoreBlock> per_child_sentence;
};

Var log_prob_of_slot(Tape& t, const ScoreBlock& block, int slot) {
  Var lsm = t.log_softmax(t.concat(block.scores));
  Tensor onehot({block.scores.size()});
  onehot[static_cast<std::size_t>(slot)] = 1.0;
  return t.sum(t.mul(lsm, t.constant(onehot)));
}

Var sum_terms(Tape& t, const std::vector<Var>& terms) {
  if (terms.empty()) return t.constant(Tensor({1}));
  Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = t.add(total, terms[i]);
  return total;
}

int argmax_lowest(const std::vector<double>& xs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(xs.size()); ++i) {
    if (xs[i] > xs[best]) best = i;
  }
  return best;
}

std::vector<std::vector<ScoreBlock>> ipr_blocks_constrained(
    Tape& t, const std::vector<std::vector<Var>>& sent, Var w1, Var w2, Var v1) {
  std::vector<std::vector<ScoreBlock>> out(sent.size());
  for (std::size_t j = 0; j < sent.size(); ++j) {
    const std::size_t n = sent[j].size();
    std::vector<Var> cand(n);
    for (std::size_t l = 0; l < n; ++l) cand[l] = t.matmul(w1, sent[j][l]);
    out[j].resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      Var query = t.matmul(w2, sent[j][k]);
      ScoreBlock& b = out[j][k];
      b.scores.reserve(n);
      b.slots.reserve(n);
      for (std::size_t l = 0; l < n; ++l) {
        b.scores.push_back(att_score(t, v1, cand[l], query));
        b.slots.push_back({static_cast<int>(j), static_cast<int>(l), l == k});
      }
    }
  }
  return out;
}

std::vector<std::vector<ScoreBlock>> ipr_blocks_global(
    Tape& t, const std::vector<std::vector<Var>>& sent, const std::vector<Var>& flat,
    const LinearizedThread& lin, Var w1, Var w2, Var v1) {
  std::vector<Var> cand(flat.size());
  for (std::size_t f = 0; f < flat.size(); ++f) cand[f] = t.matmul(w1, flat[f]);
  std::vector<std::vector<ScoreBlock>> out(sent.size());
  for (std::size_t j = 0; j < sent.size(); ++j) {
    out[j].resize(sent[j].size());
    for (std::size_t k = 0; k < sent[j].size(); ++k) {
      Var query = t.matmul(w2, sent[j][k]);
      const int own = lin.flat_of[j][k];
      ScoreBlock& b = out[j][k];
      b.scores.reserve(flat.size());
      b.slots.reserve(flat.size());
      for (std::size_t f = 0; f < flat.size(); ++f) {
        auto [pj, pk] = lin.sentence_at[f];
        b.scores.push_back(att_score(t, v1, cand[f], query));
        b.slots.push_back({pj, pk, static_cast<int>(f) == own});
      }
    }
  }
  return out;
}

std::vector<IpiBlockGroup> ipi_blocks_constrained(Tape& t,
                                                  const std::vector<std::vector<Var>>& sent,
                                                  const Thread& thread, Var w3, Var w4, Var v2) {
  std::vector<IpiBlockGroup> out;
  for (const auto& [parent, child] : thread.reply_pairs()) {
    IpiBlockGroup group;
    group.parent = parent;
    group.child = child;
    const std::size_t np = sent[parent].size();
    std::vector<Var> cand(np);
    for (std::size_t l = 0; l < np; ++l) cand[l] = t.matmul(w3, sent[parent][l]);
    for (std::size_t k = 0; k < sent[child].size(); ++k) {
      Var query = t.matmul(w4, sent[child][k]);
      ScoreBlock b;
      b.scores.reserve(np + 1);
      b.slots.reserve(np + 1);
      for (std::size_t l = 0; l < np; ++l) {
        b.scores.push_back(att_score(t, v2, cand[l], query));
        b.slots.push_back({parent, static_cast<int>(l), false});
      }
      // trailing slot: the callout points at itself, meaning "no target"
      Var self_cand = t.matmul(w3, sent[child][k]);
      b.scores.push_back(att_score(t, v2, self_cand, query));
      b.slots.push_back({child, static_cast<int>(k), true});
      group.per_child_sentence.push_back(std::move(b));
    }
    out.push_back(std::move(group));
  }
  return out;
}

std::vector<IpiBlockGroup> ipi_blocks_global(Tape& t, const std::vector<std::vector<Var>>& sent,
                                             const std::vector<Var>& flat,
                                             const LinearizedThread& lin, const Thread& thread,
                                             Var w3, Var w4, Var v2) {
  std::vector<Var> cand(flat.size());
  for (std::size_t f = 0; f < flat.size(); ++f) cand[f] = t.matmul(w3, flat[f]);
  std::vector<IpiBlockGroup> out;
  for (const auto& [parent, child] : thread.reply_pairs()) {
    IpiBlockGroup group;
    group.parent = parent;
    group.child = child;
    for (std::size_t k = 0; k < sent[child].size(); ++k) {
      Var query = t.matmul(w4, sent[child][k]);
      const int own = lin.flat_of[child][k];
      ScoreBlock b;
      b.scores.reserve(flat.size());
      b.slots.reserve(flat.size());
      for (std::size_t f = 0; f < flat.size(); ++f) {
        auto [pj, pk] = lin.sentence_at[f];
        b.scores.push_back(att_score(t, v2, cand[f], query));
        b.slots.push_back({pj, pk, static_cast<int>(f) == own});
      }
      group.per_child_sentence.push_back(std::move(b));
    }
    out.push_back(std::move(group));
  }
  return out;
}

}  // namespace

Var PcpaModel::loss_on_graph(Tape& t, const Graph& g, const Thread& thread,
                             const GoldAnnotation& gold, double w_ipr, double w_ipi,
                             double w_type) {
  std::map<std::pair<int, int>, int> ipr_gold;  // (post, source) -> target
  for (const IprLink& l : gold.ipr) ipr_gold[{l.post, l.source}] = l.target;
  std::map<std::pair<int, int>, int> ipi_gold;  // (child, callout) -> parent target
  for (const IpiLink& l : gold.ipi) ipi_gold[{l.child_post, l.callout}] = l.target;

  std::vector<Var> ipr_terms, ipi_terms, type_terms;

  if (hyper_.constrained) {
    auto blocks = ipr_blocks_constrained(t, g.sent, g.leaves.w1, g.leaves.w2, g.leaves.v1);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      for (std::size_t k = 0; k < blocks[j].size(); ++k) {
        auto it = ipr_gold.find({static_cast<int>(j), static_cast<int>(k)});
        int slot = it != ipr_gold.end() ? it->second : static_cast<int>(k);
        ipr_terms.push_back(log_prob_of_slot(t, blocks[j][k], slot));
      }
    }
    auto groups = ipi_blocks_constrained(t, g.sent, thread, g.leaves.w3, g.leaves.w4,
                                         g.leaves.v2);
    for (const IpiBlockGroup& group : groups) {
      for (std::size_t k = 0; k < group.per_child_sentence.size(); ++k) {
        auto it = ipi_gold.find({group.child, static_cast<int>(k)});
        if (it == ipi_gold.end() && hyper_.ipi_mask_noncallouts) continue;
        const ScoreBlock& b = group.per_child_sentence[k];
        int slot = it != ipi_gold.end() ? it->second : static_cast<int>(b.scores.size()) - 1;
        ipi_terms.push_back(log_prob_of_slot(t, b, slot));
      }
    }
  } else {
    auto blocks = ipr_blocks_global(t, g.sent, g.flat, g.lin, g.leaves.w1, g.leaves.w2,
                                    g.leaves.v1);
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      for (std::size_t k = 0; k < blocks[j].size(); ++k) {
        auto it = ipr_gold.find({static_cast<int>(j), static_cast<int>(k)});
        int slot = it != ipr_gold.end() ? g.lin.flat_of[j][it->second] : g.lin.flat_of[j][k];
        ipr_terms.push_back(log_prob_of_slot(t, blocks[j][k], slot));
      }
    }
    auto groups = ipi_blocks_global(t, g.sent, g.flat, g.lin, thread, g.leaves.w3,
                                    g.leaves.w4, g.leaves.v2);
    for (const IpiBlockGroup& group : groups) {
      for (std::size_t k = 0; k < group.per_child_sentence.size(); ++k) {
        auto it = ipi_gold.find({group.child, static_cast<int>(k)});
        if (it == ipi_gold.end() && hyper_.ipi_mask_noncallouts) continue;
        int slot = it != ipi_gold.end() ? g.lin.flat_of[group.parent][it->second]
                                        : g.lin.flat_of[group.child][static_cast<int>(k)];
        ipi_terms.push_back(log_prob_of_slot(t, group.per_child_sentence[k], slot));
      }
    }
  }

  for (std::size_t j = 0; j < g.sent.size(); ++j) {
    for (std::size_t k = 0; k < g.sent[j].size(); ++k) {
      Var logits = t.add(t.matmul(g.leaves.wt, g.sent[j][k]), g.leaves.bt);
      Var lsm = t.log_softmax(logits);
      Tensor onehot({3});
      onehot[static_cast<std::size_t>(gold.types[j][k])] = 1.0;
      type_terms.push_back(t.sum(t.mul(lsm, t.constant(onehot))));
    }
  }

  Var loss = t.add(t.scale(sum_terms(t, ipr_terms), -w_ipr),
                   t.add(t.scale(sum_terms(t, ipi_terms), -w_ipi),
                         t.scale(sum_terms(t, type_terms), -w_type)));
  return loss;
}

Var PcpaModel::thread_loss(Tape& tape, const Thread& thread, const GoldAnnotation& gold,
                           bool train_mode, std::mt19937_64* rng) {
  hyper_.validate();
  return thread_loss_weighted(tape, thread, gold, hyper_.alpha, hyper_.beta,
                              1.0 - hyper_.alpha - hyper_.beta, train_mode, rng);
}

Var PcpaModel::thread_loss_weighted(Tape& tape, const Thread& thread,
                                    const GoldAnnotation& gold, double w_ipr, double w_ipi,
                                    double w_type, bool train_mode, std::mt19937_64* rng) {
  Graph g = build_graph(tape, thread, train_mode, /*with_grad=*/true, rng);
  return loss_on_graph(tape, g, thread, gold, w_ipr, w_ipi, w_type);
}

ThreadDistributions PcpaModel::distributions(const Thread& thread) const {
  Tape t;
  Graph g = build_graph(t, thread, /*train_mode=*/false, /*with_grad=*/false, nullptr);
  ThreadDistributions out;

  auto read_block = [&](const ScoreBlock& b) {
    PointerDist d;
    d.slots = b.slots;
    Var p = t.softmax(t.concat(b.scores));
    const Tensor& v = t.value(p);
    d.probs.assign(v.data(), v.data() + v.size());
    return d;
  };

  std::vector<std::vector<ScoreBlock>> iprb;
  std::vector<IpiBlockGroup> ipib;
  if (hyper_.constrained) {
    iprb = ipr_blocks_constrained(t, g.sent, g.leaves.w1, g.leaves.w2, g.leaves.v1);
    ipib = ipi_blocks_constrained(t, g.sent, thread, g.leaves.w3, g.leaves.w4, g.leaves.v2);
  } else {
    iprb = ipr_blocks_global(t, g.sent, g.flat, g.lin, g.leaves.w1, g.leaves.w2, g.leaves.v1);
    ipib = ipi_blocks_global(t, g.sent, g.flat, g.lin, thread, g.leaves.w3, g.leaves.w4,
                             g.leaves.v2);
  }
  out.ipr.resize(iprb.size());
  for (std::size_t j = 0; j < iprb.size(); ++j) {
    for (const ScoreBlock& b : iprb[j]) out.ipr[j].push_back(read_block(b));
  }
  for (const IpiBlockGroup& group : ipib) {
    ThreadDistributions::IpiGroup og;
    og.parent = group.parent;
    og.child = group.child;
    for (const ScoreBlock& b : group.per_child_sentence) og.per_child_sentence.push_back(read_block(b));
    out.ipi.push_back(std::move(og));
  }

  out.type.resize(g.sent.size());
  for (std::size_t j = 0; j < g.sent.size(); ++j) {
    for (std::size_t k = 0; k < g.sent[j].size(); ++k) {
      Var p = t.softmax(t.add(t.matmul(g.leaves.wt, g.sent[j][k]), g.leaves.bt));
      const Tensor& v = t.value(p);
      out.type[j].push_back({v[0], v[1], v[2]});
    }
  }
  return out;
}

PointerDist PcpaModel::ipr_distribution(const Thread& thread, int post, int sentence) const {
  ThreadDistributions d = distributions(thread);
  return d.ipr.at(post).at(sentence);
}

PointerDist PcpaModel::ipi_distribution(const Thread& thread, int parent, int child,
                                        int sentence) const {
  ThreadDistributions d = distributions(thread);
  for (const auto& group : d.ipi) {
    if (group.parent == parent && group.child == child) {
      return group.per_child_sentence.at(sentence);
    }
  }
  throw std::invalid_argument("ipi_distribution: (" + std::to_string(parent) + ", " +
                              std::to_string(child) + ") is not a reply pair of thread " +
                              thread.id);
}

std::array<double, 3> PcpaModel::type_distribution(const Thread& thread, int post,
                                                   int sentence) const {
  ThreadDistributions d = distributions(thread);
  return d.type.at(post).at(sentence);
}

ThreadPrediction PcpaModel::predict(const Thread& thread) const {
  ThreadDistributions dist = distributions(thread);
  ThreadPrediction pred;
  pred.posts.resize(thread.posts.size());
  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    pred.posts[j].resize(thread.posts[j].sentences.size());
    for (std::size_t k = 0; k < thread.posts[j].sentences.size(); ++k) {
      const auto& tp = dist.type[j][k];
      pred.posts[j][k].type = static_cast<AccType>(
          argmax_lowest(std::vector<double>(tp.begin(), tp.end())));

      const PointerDist& pd = dist.ipr[j][k];
      const SlotRef slot = pd.slots[argmax_lowest(pd.probs)];
      // anything but a same-post, non-self winner reads as a self-pointer
      if (!slot.self && slot.post == static_cast<int>(j)) {
        pred.posts[j][k].ipr_target = slot.sentence;
      }
    }
  }
  for (const auto& group : dist.ipi) {
    for (std::size_t k = 0; k < group.per_child_sentence.size(); ++k) {
      const PointerDist& pd = group.per_child_sentence[k];
      const SlotRef slot = pd.slots[argmax_lowest(pd.probs)];
      if (!slot.self && slot.post == group.parent) {
        pred.posts[group.child][k].ipi_target = slot.sentence;
      }
    }
  }
  return pred;
}

std::vector<std::vector<Tensor>> PcpaModel::encode_states(const Thread& thread) const {
  Tape t;
  Graph g = build_graph(t, thread, false, false, nullptr);
  std::vector<std::vector<Tensor>> out(g.sent.size());
  for (std::size_t j = 0; j < g.sent.size(); ++j) {
    for (Var v : g.sent[j]) out[j].push_back(t.value(v));
  }
  return out;
}

}  // namespace pcpa
