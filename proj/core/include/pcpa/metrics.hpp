#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcpa/corpus.hpp"
#include "pcpa/prediction.hpp"

namespace pcpa {

/// A directed sentence pair, written (target <- source).
using DirectedPair = std::pair<int, int>;  // {target, source}

/// Candidate universe for one scoring unit, split into gold positives and
/// the rest. Self-pairs are never candidates.
struct PairSet {
  std::set<DirectedPair> positives;
  std::set<DirectedPair> negatives;
};

struct IprPairLocal {
  int source = 0;
  int target = 0;
};

struct IpiPairLocal {
  int callout = 0;  // child sentence
  int target = 0;   // parent sentence
};

/// Universe for one post: all ordered in-post pairs excluding self-pairs.
/// Links use local sentence ordinals.
PairSet make_ipr_pairs(int n_sentences, const std::vector<IprPairLocal>& links);

/// Universe for one reply pair: every (parent sentence <- child sentence).
PairSet make_ipi_pairs(int parent_sentences, int child_sentences,
                       const std::vector<IpiPairLocal>& links);

struct PairMetrics {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;

  static PairMetrics from_counts(long tp, long fp, long fn);
};

/// tp/fp/fn against one unit's universe. Precision is 0 by convention when
/// nothing was predicted.
PairMetrics pair_prf(const PairSet& gold, const std::set<DirectedPair>& predicted);

struct ClassMetrics {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct TypeMetrics {
  ClassMetrics claim, premise, nonarg;
};

/// One-vs-rest per class over aligned gold/predicted type sequences.
TypeMetrics type_f1(const std::vector<AccType>& gold, const std::vector<AccType>& predicted);

struct EvalReport {
  PairMetrics ipr, ipi;
  TypeMetrics types;
};

/// Micro-averaged across the corpus: pair counts accumulate over every post
/// (relations) and every reply pair (interactions) before the ratios.
EvalReport evaluate_predictions(const Corpus& corpus,
                                const std::vector<ThreadPrediction>& predictions);

std::string eval_report_to_json(const EvalReport& report);

enum class BucketBy : std::uint8_t { Depth, PostCount };

struct BucketRow {
  long lo = 0;
  long hi = 0;
  std::size_t n_threads = 0;
  PairMetrics ipr, ipi;
};

/// Threads are grouped by max depth or post count into intervals
/// (prev_edge, edge]; the first interval starts at the domain minimum
/// (depth 0 / one post). Empty buckets are omitted, not zeroed. Throws if a
/// thread falls past the last edge.
std::vector<BucketRow> bucketed_eval(const Corpus& corpus,
                                     const std::vector<ThreadPrediction>& predictions,
                                     BucketBy by, const std::vector<long>& upper_edges);

std::string buckets_to_csv(const std::vector<BucketRow>& rows, BucketBy by);

}  // namespace pcpa
