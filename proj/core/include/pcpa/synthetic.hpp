#pragma once

#include <cstdint>

#include "pcpa/corpus.hpp"

namespace pcpa {

/// Settings for the synthetic discussion-thread generator. Defaults are
/// calibrated to the corpus-level means the generator is meant to mimic:
/// ~3.33 posts per thread, thread depth ~1.09, ~4.19 sentences per post,
/// ~21.63 tokens per sentence.
struct GeneratorConfig {
  std::size_t n_threads = 399;
  double posts_per_thread_mean = 3.33;    // shifted geometric
  double sentences_per_post_mean = 4.19;  // Poisson clamped to >= 1
  double tokens_per_sentence_mean = 21.63;
  /// Weight of the root post when a new post picks what to reply to
  /// (non-root posts weigh 1). Higher keeps threads shallower.
  double root_reply_bias = 3.2;
  /// Probability that a reply pair carries an interaction (skipped when the
  /// child has no claim or the parent has no viable target sentence).
  double ipi_per_reply_pair = 0.56;
  /// Probability that the interaction target is the parent's first viable
  /// sentence rather than a uniform pick, mimicking callouts that address
  /// the parent's leading claim. Post-initial position is only visible to
  /// the encoder through separator symbols, so raising this makes the
  /// separator ablation bite on the interaction task.
  double ipi_first_target_bias = 0.0;
  double claim_ratio = 0.26;
  double premise_ratio = 0.50;  // remainder is NonArg
  std::size_t content_vocab = 2500;  // "w..." tokens carried by claims/premises
  std::size_t filler_vocab = 1500;   // "f..." tokens, only in NonArg sentences
  std::size_t n_authors = 204;
  int topic_tokens = 3;        // content tokens that define a claim's topic
  int min_shared_tokens = 2;   // planted-signal strength for IPR and IPI
  std::size_t max_sentences_per_post = 0;  // 0 = no upper clamp
  /// When positive, each thread draws this many content tokens as its own
  /// pool and argumentative sentences pad from it, the way posts in one
  /// discussion keep reusing the thread's vocabulary. Claims of one post
  /// still get disjoint topics, so in-post targets stay identifiable while
  /// cross-post candidates become lexically confusable. 0 pads from the
  /// whole content vocabulary instead.
  std::size_t thread_pool_tokens = 0;

  /// Throws std::invalid_argument on non-positive means or bad ratios.
  void validate() const;
};

/// Deterministic for a fixed (config, seed); every thread is generated from
/// its own derived seed, so generation is order-independent per thread.
/// The emitted gold always satisfies the annotation-scheme invariants, and
/// a learnable lexical signal is planted: every premise shares at least
/// min_shared_tokens content tokens with its relation target, every callout
/// shares at least that many with its interaction target, and NonArg
/// sentences use a disjoint filler vocabulary.
Corpus generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace pcpa
