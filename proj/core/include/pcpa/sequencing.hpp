#pragma once

#include <map>
#include <string>
#include <vector>

#include "pcpa/autodiff.hpp"
#include "pcpa/corpus.hpp"

namespace pcpa {

enum class SeqItemKind : std::uint8_t { Sentence, DepthSep, PostSep };

struct SeqItem {
  SeqItemKind kind = SeqItemKind::Sentence;
  int post = -1;      // thread post index (Sentence only)
  int sentence = -1;  // ordinal within the post (Sentence only)
};

enum class SeparatorMode : std::uint8_t {
  Distinct,  // depth boundaries and same-depth post boundaries differ
  Shared,    // one separator symbol for both boundary kinds
  None,      // plain concatenation, ablation setting
};

/// A thread flattened to the encoder's input order: posts sorted by
/// (depth, timestamp), a post separator between consecutive posts of the
/// same depth, a depth separator between depth groups, no leading or
/// trailing separators. Every sentence appears exactly once; flat ordinals
/// number the sentence items in sequence order.
struct LinearizedThread {
  std::vector<SeqItem> items;
  std::vector<int> post_order;                     // sorted post indices
  std::vector<std::vector<int>> flat_of;           // [post][sentence] -> flat ordinal
  std::vector<std::pair<int, int>> sentence_at;    // flat ordinal -> (post, sentence)
  std::vector<std::vector<int>> item_of;           // [post][sentence] -> index into items
};

LinearizedThread linearize(const Thread& thread, SeparatorMode mode = SeparatorMode::Distinct);

/// Frequency-ranked token table. Id 0 is reserved for unknown tokens; kept
/// ids are dense. Frequency ties break lexicographically.
class Vocabulary {
 public:
  static constexpr int kUnknownId = 0;

  Vocabulary() = default;

  static Vocabulary build(const Corpus& corpus, std::size_t max_size);

  int id(const std::string& token) const;
  std::size_t size() const { return table_.size() + 1; }  // including unknown
  const std::map<std::string, int>& table() const { return table_; }

  std::string to_json() const;
  static Vocabulary from_json(const std::string& text);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::map<std::string, int> table_;
};

/// Sentence items become the sum of their tokens' embedding rows (the
/// unknown row stands in for out-of-vocabulary tokens); separator items
/// take their learned vectors. Output length equals the item count.
std::vector<Var> embed_items(Tape& tape, const LinearizedThread& lin, const Thread& thread,
                             const Vocabulary& vocab, Var token_matrix, Var depth_sep,
                             Var post_sep);

}  // namespace pcpa
