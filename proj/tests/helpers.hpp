#pragma once

#include <random>
#include <string>
#include <vector>

#include "pcpa/annotation.hpp"
#include "pcpa/corpus.hpp"
#include "pcpa/synthetic.hpp"
#include "pcpa/tensor.hpp"

namespace pcpa::test {

inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                            double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (2.0 * u01(rng) - 1.0) * scale;
  return t;
}

/// Small generator settings so model tests stay quick.
inline GeneratorConfig tiny_generator(std::size_t n_threads) {
  GeneratorConfig cfg;
  cfg.n_threads = n_threads;
  cfg.tokens_per_sentence_mean = 7.0;
  cfg.content_vocab = 300;
  cfg.filler_vocab = 150;
  cfg.n_authors = 24;
  return cfg;
}

/// Three-post thread shaped like the scheme's running example: a root post
/// holding a claim with two premises, and two replies, the first calling out
/// the root's claim.
inline AnnotatedThread example_thread() {
  AnnotatedThread at;
  at.thread.id = "ex0";
  Post root;
  root.id = "ex0-p0";
  root.author = "a";
  root.timestamp = 100;
  root.sentences = {{{"parks", "need", "funding"}},
                    {{"budgets", "show", "parks", "underfunded"}},
                    {{"residents", "want", "parks", "funding"}}};
  Post reply1;
  reply1.id = "ex0-p1";
  reply1.author = "b";
  reply1.timestamp = 200;
  reply1.parent_id = "ex0-p0";
  reply1.sentences = {{{"agree", "parks", "need", "funding"}}, {{"offtopic", "chatter"}}};
  Post reply2;
  reply2.id = "ex0-p2";
  reply2.author = "c";
  reply2.timestamp = 300;
  reply2.parent_id = "ex0-p0";
  reply2.sentences = {{{"roads", "matter", "more"}},
                      {{"funds", "are", "limited"}}};
  at.thread.posts = {root, reply1, reply2};
  finalize_thread(at.thread);
  at.gold.types = {{AccType::Claim, AccType::Premise, AccType::Premise},
                   {AccType::Claim, AccType::NonArg},
                   {AccType::Claim, AccType::Premise}};
  at.gold.ipr = {{0, 1, 0}, {0, 2, 0}, {2, 1, 0}};
  at.gold.ipi = {{1, 0, 0, 0}};
  return at;
}

/// Lean three-post chain (2+1+1 sentences, one relation, one interaction);
/// small enough that finite-difference noise stays below the gradient scale.
inline AnnotatedThread toy_chain_thread() {
  AnnotatedThread at;
  at.thread.id = "toy";
  Post p0;
  p0.id = "p0";
  p0.author = "a";
  p0.timestamp = 1;
  p0.sentences = {{{"alpha", "beta"}}, {{"beta", "gamma"}}};
  Post p1;
  p1.id = "p1";
  p1.author = "b";
  p1.timestamp = 2;
  p1.parent_id = "p0";
  p1.sentences = {{{"alpha", "delta"}}};
  Post p2;
  p2.id = "p2";
  p2.author = "c";
  p2.timestamp = 3;
  p2.parent_id = "p1";
  p2.sentences = {{{"epsilon", "gamma"}}};
  at.thread.posts = {p0, p1, p2};
  finalize_thread(at.thread);
  at.gold.types = {{AccType::Claim, AccType::Premise}, {AccType::Claim}, {AccType::Claim}};
  at.gold.ipr = {{0, 1, 0}};
  at.gold.ipi = {{1, 0, 0, 0}};
  return at;
}

/// Uniformly random (not necessarily coherent) annotator labels; premise
/// chains and cycles are allowed so the aggregation paths get exercised.
inline AnnotatorLabels random_labels(const Thread& thread, const std::string& annotator,
                                     std::mt19937_64& rng) {
  AnnotatorLabels lab;
  lab.annotator_id = annotator;
  lab.types.resize(thread.posts.size());
  lab.ipr_target.resize(thread.posts.size());
  lab.ipi_target.resize(thread.posts.size());
  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    const int n = static_cast<int>(thread.posts[j].sentences.size());
    lab.types[j].resize(n);
    lab.ipr_target[j].resize(n);
    lab.ipi_target[j].resize(n);
    for (int k = 0; k < n; ++k) {
      double u = u01(rng);
      lab.types[j][k] = u < 0.3 ? AccType::Claim : (u < 0.75 ? AccType::Premise : AccType::NonArg);
      if (lab.types[j][k] == AccType::Premise && n > 1 && u01(rng) < 0.8) {
        int t = static_cast<int>(u01(rng) * n) % n;
        lab.ipr_target[j][k] = t;  // may self-loop or chain; A0 handles it
      }
      int parent = thread.posts[j].parent;
      if (parent >= 0 && lab.types[j][k] == AccType::Claim && u01(rng) < 0.5) {
        int pn = static_cast<int>(thread.posts[parent].sentences.size());
        lab.ipi_target[j][k] = static_cast<int>(u01(rng) * pn) % pn;
      }
    }
  }
  return lab;
}

}  // namespace pcpa::test
