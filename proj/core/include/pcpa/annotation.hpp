#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcpa/corpus.hpp"

namespace pcpa {

/// One annotator's raw labels for one thread. Dense per-sentence layout
/// matching the thread's posts; links are at most one per sentence.
struct AnnotatorLabels {
  std::string annotator_id;
  std::vector<std::vector<AccType>> types;                  // [post][sentence]
  std::vector<std::vector<std::optional<int>>> ipr_target;  // target ordinal in the same post
  std::vector<std::vector<std::optional<int>>> ipi_target;  // target ordinal in the parent post
};

/// Throws std::invalid_argument when the labels do not cover exactly the
/// thread's sentences or contain out-of-range targets.
void check_labels(const AnnotatorLabels& labels, const Thread& thread);

struct A0Result {
  AnnotatorLabels labels;
  std::vector<std::string> dropped;  // one note per relation removed to break a cycle
};

/// A0: any relation whose target this annotator typed as premise is
/// redirected along the target's chain to the chain's terminal sentence
/// (the root claim in well-formed labels). Cycles in a chain are broken by
/// dropping the in-cycle relation with the largest source ordinal, which is
/// reported. Idempotent.
A0Result a0_normalize(const AnnotatorLabels& labels, const Thread& thread);

/// A1: per-sentence majority type; three-way disagreement yields NonArg.
std::vector<std::vector<AccType>> majority_vote_types(
    const std::array<AnnotatorLabels, 3>& annotators, const Thread& thread);

/// A2: an exact directed in-post pair survives iff at least two annotators
/// annotated that pair. Expects post-A0 labels. Result is sorted.
std::vector<IprLink> majority_vote_links(const std::array<AnnotatorLabels, 3>& annotators,
                                         const Thread& thread);

struct IprPair {
  int source = 0;
  int target = 0;
};

/// One tree per voted claim of a post; a link joins the tree whose claim its
/// target chain terminates at. Links with non-premise sources or chains that
/// do not end in a claim join no tree.
struct ClaimTree {
  int root = 0;  // sentence ordinal of the claim
  std::vector<IprPair> links;
};

std::vector<ClaimTree> build_claim_trees(const std::vector<AccType>& types,
                                         const std::vector<IprPair>& links);

struct PostGold {
  std::vector<AccType> types;
  std::vector<IprPair> links;
};

/// A4: premises that made it into no tree become NonArg; the surviving
/// relation set is exactly the union of the trees.
PostGold prune_orphans(const std::vector<AccType>& types, const std::vector<ClaimTree>& trees);

struct AggregateResult {
  GoldAnnotation gold;
  std::vector<std::string> notes;
};

/// Full pipeline: per-annotator A0, then A1-A4 per post, then the same
/// two-vote rule for interactions (phase-two labels), kept only for callouts
/// that ended up as gold claims. The result always passes validate_gold.
AggregateResult aggregate_gold(const Thread& thread,
                               const std::array<AnnotatorLabels, 3>& phase1,
                               const std::array<AnnotatorLabels, 3>& phase2_ipi);

struct KappaResult {
  double value = 0.0;
  bool defined = true;  // false when expected agreement is 1 (single-category mass)
};

/// Fleiss (1971) chance-corrected agreement over an items x categories count
/// matrix. Every row must sum to the same rater count n >= 2.
KappaResult fleiss_kappa(const std::vector<std::vector<long>>& counts);

struct KappaEntry {
  KappaResult kappa;
  std::size_t n_items = 0;
};

struct AgreementReport {
  std::map<std::string, KappaEntry> by_category;  // Claim, Premise, NonArg, IPR, IPI
};

/// Binary (one-vs-rest) agreement per type over sentences, plus pairwise
/// link/no-link agreement over the in-post pair universe (relations, after
/// per-annotator A0) and the parent-child pair universe (interactions).
AgreementReport agreement_report(
    const Corpus& corpus,
    const std::map<std::string, std::array<AnnotatorLabels, 3>>& labels_by_thread);

std::string agreement_report_to_json(const AgreementReport& report);

/// JSONL, one line per thread:
/// {"thread_id","annotator_id","types":[[..]],"ipr":[[post,src,tgt],..],
///  "ipi":[[child,callout,parent,tgt],..]}
std::map<std::string, AnnotatorLabels> load_annotator_labels(const std::string& path,
                                                             const Corpus& corpus);
void save_annotator_labels(const std::string& path, const Corpus& corpus,
                           const std::map<std::string, AnnotatorLabels>& by_thread);

}  // namespace pcpa
