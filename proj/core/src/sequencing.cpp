#include "pcpa/sequencing.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pcpa {

using json = nlohmann::json;

LinearizedThread linearize(const Thread& thread, SeparatorMode mode) {
  LinearizedThread lin;
  lin.post_order.resize(thread.posts.size());
  for (std::size_t i = 0; i < thread.posts.size(); ++i) lin.post_order[i] = static_cast<int>(i);
  std::sort(lin.post_order.begin(), lin.post_order.end(), [&](int a, int b) {
    const Post& pa = thread.posts[a];
    const Post& pb = thread.posts[b];
    if (pa.depth != pb.depth) return pa.depth < pb.depth;
    return pa.timestamp < pb.timestamp;
  });

  lin.flat_of.resize(thread.posts.size());
  lin.item_of.resize(thread.posts.size());
  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    lin.flat_of[j].assign(thread.posts[j].sentences.size(), -1);
    lin.item_of[j].assign(thread.posts[j].sentences.size(), -1);
  }

  const bool separators = mode != SeparatorMode::None;
  int prev_depth = -1;
  bool first = true;
  for (int j : lin.post_order) {
    const Post& post = thread.posts[j];
    if (!first && separators) {
      SeqItemKind kind = post.depth != prev_depth ? SeqItemKind::DepthSep : SeqItemKind::PostSep;
      if (mode == SeparatorMode::Shared) kind = SeqItemKind::DepthSep;
      lin.items.push_back({kind, -1, -1});
    }
    for (int k = 0; k < static_cast<int>(post.sentences.size()); ++k) {
      lin.item_of[j][k] = static_cast<int>(lin.items.size());
      lin.flat_of[j][k] = static_cast<int>(lin.sentence_at.size());
      lin.sentence_at.emplace_back(j, k);
      lin.items.push_back({SeqItemKind::Sentence, j, k});
    }
    prev_depth = post.depth;
    first = false;
  }
  return lin;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t max_size) {
  if (max_size < 1) throw std::invalid_argument("vocabulary: max_size must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const AnnotatedThread& at : corpus) {
    for (const Post& p : at.thread.posts) {
      for (const Sentence& s : p.sentences) {
        for (const std::string& tok : s.tokens) ++freq[tok];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);

  Vocabulary v;
  int next_id = 1;  // 0 is the unknown token
  for (const auto& [tok, n] : ranked) v.table_[tok] = next_id++;
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = table_.find(token);
  return it == table_.end() ? kUnknownId : it->second;
}

std::string Vocabulary::to_json() const {
  json j = json::object();
  for (const auto& [tok, id] : table_) j[tok] = id;
  return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  Vocabulary v;
  json j = json::parse(text);
  for (auto it = j.begin(); it != j.end(); ++it) {
    int id = it.value().get<int>();
    if (id <= 0) throw std::invalid_argument("vocabulary: ids must be positive (0 is unknown)");
    v.table_[it.key()] = id;
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  out << to_json() << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

std::vector<Var> embed_items(Tape& tape, const LinearizedThread& lin, const Thread& thread,
                             const Vocabulary& vocab, Var token_matrix, Var depth_sep,
                             Var post_sep) {
  std::vector<Var> out;
  out.reserve(lin.items.size());
  for (const SeqItem& item : lin.items) {
    switch (item.kind) {
      case SeqItemKind::DepthSep:
        out.push_back(depth_sep);
        break;
      case SeqItemKind::PostSep:
        out.push_back(post_sep);
        break;
      case SeqItemKind::Sentence: {
        const Sentence& s = thread.posts[item.post].sentences[item.sentence];
        std::vector<int> ids;
        ids.reserve(s.tokens.size());
        for (const std::string& tok : s.tokens) ids.push_back(vocab.id(tok));
        out.push_back(tape.rows_sum(token_matrix, ids));
        break;
      }
    }
  }
  return out;
}

}  // namespace pcpa
