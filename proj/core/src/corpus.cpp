#include "pcpa/corpus.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pcpa {

using json = nlohmann::ordered_json;

const char* to_string(AccType t) {
  switch (t) {
    case AccType::Claim: return "Claim";
    case AccType::Premise: return "Premise";
    case AccType::NonArg: return "NonArg";
  }
  return "?";
}

AccType acc_type_from_string(const std::string& s) {
  if (s == "Claim") return AccType::Claim;
  if (s == "Premise") return AccType::Premise;
  if (s == "NonArg") return AccType::NonArg;
  throw CorpusError("unknown ACC type: " + s);
}

std::vector<std::pair<int, int>> Thread::reply_pairs() const {
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < static_cast<int>(posts.size()); ++j) {
    if (posts[j].parent >= 0) pairs.emplace_back(posts[j].parent, j);
  }
  return pairs;
}

int Thread::max_depth() const {
  int d = 0;
  for (const Post& p : posts) d = std::max(d, p.depth);
  return d;
}

std::size_t Thread::n_sentences() const {
  std::size_t n = 0;
  for (const Post& p : posts) n += p.sentences.size();
  return n;
}

void finalize_thread(Thread& thread) {
  std::map<std::string, int> index_of;
  for (int i = 0; i < static_cast<int>(thread.posts.size()); ++i) {
    if (!index_of.emplace(thread.posts[i].id, i).second) {
      throw CorpusError("thread " + thread.id + ": duplicate post id " + thread.posts[i].id);
    }
  }
  for (Post& p : thread.posts) {
    if (p.parent_id.empty()) {
      p.parent = -1;
      continue;
    }
    auto it = index_of.find(p.parent_id);
    if (it == index_of.end()) {
      throw CorpusError("thread " + thread.id + ": post " + p.id +
                        " replies to unknown post " + p.parent_id);
    }
    p.parent = it->second;
  }
  int roots = 0;
  for (const Post& p : thread.posts) roots += p.parent < 0 ? 1 : 0;
  if (roots != 1) {
    throw CorpusError("thread " + thread.id + ": expected exactly one root post, found " +
                      std::to_string(roots));
  }
  // depth via parent chain; a chain longer than the post count is a cycle
  for (Post& p : thread.posts) {
    int depth = 0;
    int cur = p.parent;
    while (cur >= 0) {
      ++depth;
      if (depth > static_cast<int>(thread.posts.size())) {
        throw CorpusError("thread " + thread.id + ": reply cycle involving post " + p.id);
      }
      cur = thread.posts[cur].parent;
    }
    p.depth = depth;
  }
}

std::vector<std::string> validate_thread(const Thread& thread) {
  std::vector<std::string> out;
  auto where = [&](const Post& p) { return "thread " + thread.id + " post " + p.id; };

  int roots = 0;
  for (const Post& p : thread.posts) {
    if (p.parent < 0) {
      ++roots;
      if (p.depth != 0) out.push_back(where(p) + ": root post must have depth 0");
      if (!p.parent_id.empty()) out.push_back(where(p) + ": depth-0 post with a parent id");
    } else {
      if (p.parent >= static_cast<int>(thread.posts.size())) {
        out.push_back(where(p) + ": parent index out of range");
        continue;
      }
      const Post& parent = thread.posts[p.parent];
      if (parent.depth != p.depth - 1) {
        out.push_back(where(p) + ": parent depth must be depth-1");
      }
    }
    if (p.sentences.empty()) out.push_back(where(p) + ": post has no sentences");
    for (std::size_t k = 0; k < p.sentences.size(); ++k) {
      if (p.sentences[k].tokens.empty()) {
        out.push_back(where(p) + " sentence " + std::to_string(k) + ": empty token list");
      }
    }
  }
  if (roots != 1) {
    out.push_back("thread " + thread.id + ": reply graph must have exactly one root");
  }
  // the depth-then-timestamp sort must be total
  std::map<std::pair<int, std::int64_t>, const Post*> seen;
  for (const Post& p : thread.posts) {
    auto key = std::make_pair(p.depth, p.timestamp);
    auto [it, inserted] = seen.emplace(key, &p);
    if (!inserted) {
      out.push_back("thread " + thread.id + ": posts " + it->second->id + " and " + p.id +
                    " share depth " + std::to_string(p.depth) + " and timestamp " +
                    std::to_string(p.timestamp));
    }
  }
  return out;
}

std::vector<std::string> validate_gold(const Thread& thread, const GoldAnnotation& gold) {
  std::vector<std::string> out = validate_thread(thread);
  const int n_posts = static_cast<int>(thread.posts.size());
  auto loc = [&](int post, int sent) {
    return "thread " + thread.id + " post " +
           (post >= 0 && post < n_posts ? thread.posts[post].id : std::to_string(post)) +
           " sentence " + std::to_string(sent);
  };

  if (static_cast<int>(gold.types.size()) != n_posts) {
    out.push_back("thread " + thread.id + ": types cover " + std::to_string(gold.types.size()) +
                  " posts, thread has " + std::to_string(n_posts));
    return out;
  }
  for (int j = 0; j < n_posts; ++j) {
    if (gold.types[j].size() != thread.posts[j].sentences.size()) {
      out.push_back("thread " + thread.id + " post " + thread.posts[j].id +
                    ": type count does not match sentence count");
      return out;
    }
  }

  auto sent_ok = [&](int post, int sent) {
    return post >= 0 && post < n_posts && sent >= 0 &&
           sent < static_cast<int>(thread.posts[post].sentences.size());
  };

  // IPR: in range, source != target, source is a premise, one link per premise
  std::map<std::pair<int, int>, int> outgoing;  // (post, source) -> target
  bool ipr_indices_ok = true;
  for (const IprLink& l : gold.ipr) {
    if (!sent_ok(l.post, l.source) || !sent_ok(l.post, l.target)) {
      out.push_back("thread " + thread.id + ": IPR index out of range (post " +
                    std::to_string(l.post) + ", " + std::to_string(l.source) + "<-" +
                    std::to_string(l.target) + ")");
      ipr_indices_ok = false;
      continue;
    }
    if (l.source == l.target) {
      out.push_back(loc(l.post, l.source) + ": IPR source equals target");
      continue;
    }
    if (gold.types[l.post][l.source] != AccType::Premise) {
      out.push_back(loc(l.post, l.source) + ": IPR source must be premise");
    }
    auto [it, inserted] = outgoing.emplace(std::make_pair(l.post, l.source), l.target);
    if (!inserted) {
      out.push_back(loc(l.post, l.source) + ": premise has more than one outgoing IPR");
    }
  }
  if (ipr_indices_ok) {
    // every premise links out, and chains terminate at claims without cycles
    for (int j = 0; j < n_posts; ++j) {
      for (int k = 0; k < static_cast<int>(gold.types[j].size()); ++k) {
        if (gold.types[j][k] != AccType::Premise) continue;
        if (!outgoing.count({j, k})) {
          out.push_back(loc(j, k) + ": premise lacks an outgoing IPR");
          continue;
        }
        int cur = k;
        int steps = 0;
        bool bad = false;
        while (true) {
          auto it = outgoing.find({j, cur});
          if (it == outgoing.end()) break;
          cur = it->second;
          if (++steps > static_cast<int>(gold.types[j].size())) {
            out.push_back(loc(j, k) + ": IPR chain contains a cycle");
            bad = true;
            break;
          }
        }
        if (!bad && gold.types[j][cur] != AccType::Claim) {
          out.push_back(loc(j, k) + ": IPR chain does not terminate at a claim");
        }
      }
    }
  }

  // IPI: parent matches the reply tree, callout is a claim, one per callout
  std::set<std::pair<int, int>> callout_seen;
  for (const IpiLink& l : gold.ipi) {
    if (!sent_ok(l.child_post, l.callout) || !sent_ok(l.parent_post, l.target)) {
      out.push_back("thread " + thread.id + ": IPI index out of range");
      continue;
    }
    if (thread.posts[l.child_post].parent != l.parent_post) {
      out.push_back(loc(l.child_post, l.callout) + ": IPI parent post " +
                    thread.posts[l.parent_post].id + " is not the post's parent");
    }
    if (gold.types[l.child_post][l.callout] != AccType::Claim) {
      out.push_back(loc(l.child_post, l.callout) + ": callout must be a claim");
    }
    if (!callout_seen.emplace(l.child_post, l.callout).second) {
      out.push_back(loc(l.child_post, l.callout) + ": callout has more than one interaction");
    }
  }
  return out;
}

namespace {

json thread_to_json(const AnnotatedThread& at) {
  const Thread& t = at.thread;
  json jposts = json::array();
  for (const Post& p : t.posts) {
    json jp;
    jp["post_id"] = p.id;
    jp["author_id"] = p.author;
    jp["timestamp"] = p.timestamp;
    if (p.parent_id.empty()) {
      jp["parent_post_id"] = nullptr;
    } else {
      jp["parent_post_id"] = p.parent_id;
    }
    json jsent = json::array();
    for (const Sentence& s : p.sentences) jsent.push_back(s.tokens);
    jp["sentences"] = std::move(jsent);
    jposts.push_back(std::move(jp));
  }
  json jtypes = json::array();
  for (const auto& post_types : at.gold.types) {
    json row = json::array();
    for (AccType ty : post_types) row.push_back(to_string(ty));
    jtypes.push_back(std::move(row));
  }
  json jipr = json::array();
  for (const IprLink& l : at.gold.ipr) jipr.push_back({l.post, l.source, l.target});
  json jipi = json::array();
  for (const IpiLink& l : at.gold.ipi) {
    jipi.push_back({l.child_post, l.callout, l.parent_post, l.target});
  }
  json out;
  out["thread_id"] = t.id;
  out["posts"] = std::move(jposts);
  out["gold"] = {{"types", std::move(jtypes)}, {"ipr", std::move(jipr)}, {"ipi", std::move(jipi)}};
  return out;
}

AnnotatedThread thread_from_json(const json& j) {
  AnnotatedThread at;
  at.thread.id = j.at("thread_id").get<std::string>();
  for (const json& jp : j.at("posts")) {
    Post p;
    p.id = jp.at("post_id").get<std::string>();
    p.author = jp.at("author_id").get<std::string>();
    p.timestamp = jp.at("timestamp").get<std::int64_t>();
    const json& par = jp.at("parent_post_id");
    if (!par.is_null()) p.parent_id = par.get<std::string>();
    for (const json& js : jp.at("sentences")) {
      Sentence s;
      s.tokens = js.get<std::vector<std::string>>();
      p.sentences.push_back(std::move(s));
    }
    at.thread.posts.push_back(std::move(p));
  }
  if (j.contains("gold")) {
    const json& g = j.at("gold");
    for (const json& row : g.at("types")) {
      std::vector<AccType> tr;
      for (const json& v : row) tr.push_back(acc_type_from_string(v.get<std::string>()));
      at.gold.types.push_back(std::move(tr));
    }
    for (const json& l : g.at("ipr")) {
      at.gold.ipr.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<int>()});
    }
    for (const json& l : g.at("ipi")) {
      at.gold.ipi.push_back(
          {l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<int>(), l.at(3).get<int>()});
    }
  }
  finalize_thread(at.thread);
  return at;
}

}  // namespace

std::string thread_to_json_line(const AnnotatedThread& at) { return thread_to_json(at).dump(); }

AnnotatedThread thread_from_json_line(const std::string& line) {
  return thread_from_json(json::parse(line));
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
    }
    if (j.contains("_meta")) continue;
    AnnotatedThread at;
    try {
      at = thread_from_json(j);
    } catch (const json::exception& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": bad record: " + e.what());
    }
    std::vector<std::string> violations = validate_gold(at.thread, at.gold);
    if (!violations.empty()) {
      std::string msg = path + ":" + std::to_string(line_no) + ": invalid annotation:";
      for (const std::string& v : violations) msg += "\n  " + v;
      throw CorpusError(msg);
    }
    corpus.push_back(std::move(at));
  }
  return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus, const std::string& header_json) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  if (!header_json.empty()) {
    out << "{\"_meta\":" << header_json << "}\n";
  }
  for (const AnnotatedThread& at : corpus) out << thread_to_json_line(at) << "\n";
}

namespace {
struct Moments {
  double mean = 0;
  double stdev = 0;
};
Moments population_moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double sq = 0;
  for (double x : xs) sq += (x - m.mean) * (x - m.mean);
  m.stdev = std::sqrt(sq / static_cast<double>(xs.size()));
  return m;
}
}  // namespace

CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.empty()) throw CorpusError("compute_stats: empty corpus");
  CorpusStats s;
  std::vector<double> posts_per_thread, depths, sents_per_post, toks_per_sentence;
  for (const AnnotatedThread& at : corpus) {
    ++s.n_threads;
    posts_per_thread.push_back(static_cast<double>(at.thread.posts.size()));
    depths.push_back(static_cast<double>(at.thread.max_depth()));
    for (const Post& p : at.thread.posts) {
      ++s.n_posts;
      sents_per_post.push_back(static_cast<double>(p.sentences.size()));
      for (const Sentence& sent : p.sentences) {
        ++s.n_sentences;
        s.n_tokens += sent.tokens.size();
        toks_per_sentence.push_back(static_cast<double>(sent.tokens.size()));
      }
    }
  }
  Moments m = population_moments(posts_per_thread);
  s.mean_posts_per_thread = m.mean;
  s.stdev_posts_per_thread = m.stdev;
  m = population_moments(depths);
  s.mean_depth = m.mean;
  s.stdev_depth = m.stdev;
  m = population_moments(sents_per_post);
  s.mean_sentences_per_post = m.mean;
  s.stdev_sentences_per_post = m.stdev;
  m = population_moments(toks_per_sentence);
  s.mean_tokens_per_sentence = m.mean;
  s.stdev_tokens_per_sentence = m.stdev;
  return s;
}

std::string stats_to_json(const CorpusStats& s) {
  json j;
  j["n_threads"] = s.n_threads;
  j["n_posts"] = s.n_posts;
  j["n_sentences"] = s.n_sentences;
  j["n_tokens"] = s.n_tokens;
  j["posts_per_thread"] = {{"mean", s.mean_posts_per_thread}, {"stdev", s.stdev_posts_per_thread}};
  j["thread_depth"] = {{"mean", s.mean_depth}, {"stdev", s.stdev_depth}};
  j["sentences_per_post"] = {{"mean", s.mean_sentences_per_post},
                             {"stdev", s.stdev_sentences_per_post}};
  j["tokens_per_sentence"] = {{"mean", s.mean_tokens_per_sentence},
                              {"stdev", s.stdev_tokens_per_sentence}};
  return j.dump(2);
}

}  // namespace pcpa
