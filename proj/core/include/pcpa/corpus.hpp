#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcpa {

/// Argument component candidate type. Every sentence carries exactly one.
enum class AccType : std::uint8_t { Claim, Premise, NonArg };

const char* to_string(AccType t);
AccType acc_type_from_string(const std::string& s);

struct Sentence {
  std::vector<std::string> tokens;  // never empty in a valid corpus
};

struct Post {
  std::string id;
  std::string author;
  std::int64_t timestamp = 0;
  std::string parent_id;  // empty for the root post
  int parent = -1;        // index into Thread::posts, derived
  int depth = 0;          // derived from parent links
  std::vector<Sentence> sentences;
};

struct Thread {
  std::string id;
  std::vector<Post> posts;

  /// (parent, child) post-index pairs, one per non-root post.
  std::vector<std::pair<int, int>> reply_pairs() const;
  int max_depth() const;
  std::size_t n_sentences() const;
};

/// Directed in-post relation: sentence `source` (a premise) points at
/// sentence `target` of the same post.
struct IprLink {
  int post = 0;
  int source = 0;
  int target = 0;

  friend auto operator<=>(const IprLink&, const IprLink&) = default;
};

/// Inter-post interaction: sentence `callout` (a claim) of `child_post`
/// points at sentence `target` of its parent post.
struct IpiLink {
  int child_post = 0;
  int callout = 0;
  int parent_post = 0;
  int target = 0;

  friend auto operator<=>(const IpiLink&, const IpiLink&) = default;
};

struct GoldAnnotation {
  std::vector<std::vector<AccType>> types;  // [post][sentence]
  std::vector<IprLink> ipr;
  std::vector<IpiLink> ipi;
};

struct AnnotatedThread {
  Thread thread;
  GoldAnnotation gold;
};

using Corpus = std::vector<AnnotatedThread>;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves parent ids to indices and computes depths. Throws CorpusError
/// on unresolved parents, reply cycles, or a root count other than one.
void finalize_thread(Thread& thread);

/// Structural thread invariants: tree shape, depth consistency, non-empty
/// sentences, no timestamp ties between posts of equal depth (the
/// depth-then-timestamp sort must be total). Violations are data, not errors.
std::vector<std::string> validate_thread(const Thread& thread);

/// All thread invariants plus the annotation scheme: IPR sources are
/// premises with exactly one outgoing link each, in-post IPR chains are
/// acyclic and terminate at claims, callouts are claims pointing into the
/// actual parent post, at most one interaction per callout.
std::vector<std::string> validate_gold(const Thread& thread, const GoldAnnotation& gold);

/// One thread per JSONL line. Lines holding a "_meta" object are headers
/// and are skipped. Throws CorpusError with the line number on parse
/// failures and with the violation list when invariants fail.
Corpus load_corpus(const std::string& path);

/// Writes the corpus in the JSONL schema. A non-empty header_json string
/// is emitted first as {"_meta": <header_json>}.
void save_corpus(const std::string& path, const Corpus& corpus,
                 const std::string& header_json = "");

std::string thread_to_json_line(const AnnotatedThread& at);
AnnotatedThread thread_from_json_line(const std::string& line);

struct CorpusStats {
  std::size_t n_threads = 0;
  std::size_t n_posts = 0;
  std::size_t n_sentences = 0;
  std::size_t n_tokens = 0;
  double mean_posts_per_thread = 0, stdev_posts_per_thread = 0;
  double mean_depth = 0, stdev_depth = 0;  // per-thread max depth
  double mean_sentences_per_post = 0, stdev_sentences_per_post = 0;
  double mean_tokens_per_sentence = 0, stdev_tokens_per_sentence = 0;
};

/// Exact counts and population moments. Throws on an empty corpus.
CorpusStats compute_stats(const Corpus& corpus);

std::string stats_to_json(const CorpusStats& s);

}  // namespace pcpa
