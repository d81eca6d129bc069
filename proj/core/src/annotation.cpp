#include "pcpa/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pcpa {

using json = nlohmann::ordered_json;

void check_labels(const AnnotatorLabels& labels, const Thread& thread) {
  const std::size_t n_posts = thread.posts.size();
  if (labels.types.size() != n_posts || labels.ipr_target.size() != n_posts ||
      labels.ipi_target.size() != n_posts) {
    throw std::invalid_argument("labels for annotator " + labels.annotator_id +
                                " do not cover thread " + thread.id);
  }
  for (std::size_t j = 0; j < n_posts; ++j) {
    const std::size_t n = thread.posts[j].sentences.size();
    if (labels.types[j].size() != n || labels.ipr_target[j].size() != n ||
        labels.ipi_target[j].size() != n) {
      throw std::invalid_argument("labels for annotator " + labels.annotator_id +
                                  " do not match sentence count of post " + thread.posts[j].id);
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (labels.ipr_target[j][k] &&
          (*labels.ipr_target[j][k] < 0 || *labels.ipr_target[j][k] >= static_cast<int>(n))) {
        throw std::invalid_argument("relation target out of range in post " + thread.posts[j].id);
      }
      if (labels.ipi_target[j][k]) {
        int parent = thread.posts[j].parent;
        if (parent < 0) {
          throw std::invalid_argument("interaction labeled on root post " + thread.posts[j].id);
        }
        int t = *labels.ipi_target[j][k];
        if (t < 0 || t >= static_cast<int>(thread.posts[parent].sentences.size())) {
          throw std::invalid_argument("interaction target out of range in post " +
                                      thread.posts[j].id);
        }
      }
    }
  }
}

A0Result a0_normalize(const AnnotatorLabels& labels, const Thread& thread) {
  check_labels(labels, thread);
  A0Result res;
  res.labels = labels;

  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    auto& targets = res.labels.ipr_target[j];
    const auto& types = res.labels.types[j];
    const int n = static_cast<int>(targets.size());

    // break chain cycles: drop the in-cycle edge with the largest source
    bool dropped = true;
    while (dropped) {
      dropped = false;
      std::vector<int> color(n, 0);  // 0 fresh, 1 on stack, 2 done
      for (int start = 0; start < n && !dropped; ++start) {
        if (color[start] != 0) continue;
        std::vector<int> stack;
        int cur = start;
        while (cur >= 0 && color[cur] == 0) {
          color[cur] = 1;
          stack.push_back(cur);
          cur = targets[cur] ? *targets[cur] : -1;
        }
        if (cur >= 0 && color[cur] == 1) {
          // the cycle is the tail of the stack starting at cur
          auto it = std::find(stack.begin(), stack.end(), cur);
          int worst = *std::max_element(it, stack.end());
          res.dropped.push_back("thread " + thread.id + " post " + thread.posts[j].id +
                                ": dropped relation from sentence " + std::to_string(worst) +
                                " to break a premise-chain cycle (annotator " +
                                labels.annotator_id + ")");
          targets[worst] = std::nullopt;
          dropped = true;
        }
        for (int s : stack) color[s] = 2;
      }
    }

    // redirect premise-targeted relations to their chain terminal
    std::vector<std::optional<int>> original = targets;
    for (int s = 0; s < n; ++s) {
      if (!original[s]) continue;
      int t = *original[s];
      int steps = 0;
      while (types[t] == AccType::Premise && original[t] && ++steps <= n) {
        t = *original[t];
      }
      targets[s] = t;
    }
  }
  return res;
}

std::vector<std::vector<AccType>> majority_vote_types(
    const std::array<AnnotatorLabels, 3>& annotators, const Thread& thread) {
  for (const AnnotatorLabels& a : annotators) check_labels(a, thread);
  std::vector<std::vector<AccType>> out;
  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    std::vector<AccType> row;
    for (std::size_t k = 0; k < thread.posts[j].sentences.size(); ++k) {
      int votes[3] = {0, 0, 0};
      for (const AnnotatorLabels& a : annotators) {
        votes[static_cast<int>(a.types[j][k])] += 1;
      }
      AccType winner = AccType::NonArg;  // three-way disagreement falls here
      for (int t = 0; t < 3; ++t) {
        if (votes[t] >= 2) winner = static_cast<AccType>(t);
      }
      row.push_back(winner);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<IprLink> majority_vote_links(const std::array<AnnotatorLabels, 3>& annotators,
                                         const Thread& thread) {
  for (const AnnotatorLabels& a : annotators) check_labels(a, thread);
  std::map<std::tuple<int, int, int>, int> votes;  // (post, source, target) -> count
  for (const AnnotatorLabels& a : annotators) {
    for (std::size_t j = 0; j < a.ipr_target.size(); ++j) {
      for (std::size_t k = 0; k < a.ipr_target[j].size(); ++k) {
        if (a.ipr_target[j][k]) {
          votes[{static_cast<int>(j), static_cast<int>(k), *a.ipr_target[j][k]}] += 1;
        }
      }
    }
  }
  std::vector<IprLink> out;
  for (const auto& [key, count] : votes) {
    if (count >= 2) {
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ClaimTree> build_claim_trees(const std::vector<AccType>& types,
                                         const std::vector<IprPair>& links) {
  const int n = static_cast<int>(types.size());
  std::vector<std::optional<int>> out_edge(n);
  for (const IprPair& l : links) out_edge[l.source] = l.target;

  std::map<int, std::size_t> tree_of_claim;
  std::vector<ClaimTree> trees;
  for (int k = 0; k < n; ++k) {
    if (types[k] == AccType::Claim) {
      tree_of_claim[k] = trees.size();
      trees.push_back({k, {}});
    }
  }
  for (const IprPair& l : links) {
    if (types[l.source] != AccType::Premise) continue;
    int cur = l.target;
    int steps = 0;
    while (types[cur] == AccType::Premise && out_edge[cur] && ++steps <= n) {
      cur = *out_edge[cur];
    }
    if (steps > n) continue;  // cycle: terminates at no claim
    auto it = tree_of_claim.find(cur);
    if (it != tree_of_claim.end()) trees[it->second].links.push_back(l);
  }
  return trees;
}

PostGold prune_orphans(const std::vector<AccType>& types, const std::vector<ClaimTree>& trees) {
  PostGold out;
  out.types = types;
  std::set<int> linked;
  for (const ClaimTree& t : trees) {
    for (const IprPair& l : t.links) {
      out.links.push_back(l);
      linked.insert(l.source);
    }
  }
  for (std::size_t k = 0; k < out.types.size(); ++k) {
    if (out.types[k] == AccType::Premise && !linked.count(static_cast<int>(k))) {
      out.types[k] = AccType::NonArg;
    }
  }
  std::sort(out.links.begin(), out.links.end(),
            [](const IprPair& a, const IprPair& b) {
              return std::tie(a.source, a.target) < std::tie(b.source, b.target);
            });
  return out;
}

AggregateResult aggregate_gold(const Thread& thread,
                               const std::array<AnnotatorLabels, 3>& phase1,
                               const std::array<AnnotatorLabels, 3>& phase2_ipi) {
  AggregateResult res;
  std::array<AnnotatorLabels, 3> normalized;
  for (std::size_t a = 0; a < 3; ++a) {
    A0Result a0 = a0_normalize(phase1[a], thread);
    normalized[a] = std::move(a0.labels);
    for (std::string& note : a0.dropped) res.notes.push_back(std::move(note));
  }
  std::vector<std::vector<AccType>> types = majority_vote_types(normalized, thread);
  std::vector<IprLink> links = majority_vote_links(normalized, thread);

  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    std::vector<IprPair> post_links;
    for (const IprLink& l : links) {
      if (l.post == static_cast<int>(j)) post_links.push_back({l.source, l.target});
    }
    PostGold pg = prune_orphans(types[j], build_claim_trees(types[j], post_links));
    res.gold.types.push_back(pg.types);
    for (const IprPair& l : pg.links) {
      res.gold.ipr.push_back({static_cast<int>(j), l.source, l.target});
    }
  }

  // phase two: exact-pair majority for interactions, callout must be a gold claim
  for (const AnnotatorLabels& a : phase2_ipi) check_labels(a, thread);
  std::map<std::tuple<int, int, int>, int> ipi_votes;  // (child post, callout, target)
  for (const AnnotatorLabels& a : phase2_ipi) {
    for (std::size_t j = 0; j < a.ipi_target.size(); ++j) {
      for (std::size_t k = 0; k < a.ipi_target[j].size(); ++k) {
        if (a.ipi_target[j][k]) {
          ipi_votes[{static_cast<int>(j), static_cast<int>(k), *a.ipi_target[j][k]}] += 1;
        }
      }
    }
  }
  for (const auto& [key, count] : ipi_votes) {
    if (count < 2) continue;
    auto [child, callout, target] = key;
    if (res.gold.types[child][callout] != AccType::Claim) continue;
    res.gold.ipi.push_back({child, callout, thread.posts[child].parent, target});
  }
  std::sort(res.gold.ipi.begin(), res.gold.ipi.end());
  return res;
}

KappaResult fleiss_kappa(const std::vector<std::vector<long>>& counts) {
  if (counts.empty() || counts[0].empty()) {
    throw std::invalid_argument("fleiss_kappa: empty count matrix");
  }
  const std::size_t n_items = counts.size();
  const std::size_t n_cats = counts[0].size();
  long n_raters = 0;
  for (long c : counts[0]) n_raters += c;
  if (n_raters < 2) throw std::invalid_argument("fleiss_kappa: need at least two raters");

  double p_bar = 0.0;
  std::vector<double> p_cat(n_cats, 0.0);
  for (const auto& row : counts) {
    if (row.size() != n_cats) throw std::invalid_argument("fleiss_kappa: ragged matrix");
    long row_sum = 0;
    double agree = 0.0;
    for (std::size_t c = 0; c < n_cats; ++c) {
      row_sum += row[c];
      agree += static_cast<double>(row[c]) * static_cast<double>(row[c] - 1);
      p_cat[c] += static_cast<double>(row[c]);
    }
    if (row_sum != n_raters) {
      throw std::invalid_argument("fleiss_kappa: rows must share one rater count");
    }
    p_bar += agree / (static_cast<double>(n_raters) * static_cast<double>(n_raters - 1));
  }
  p_bar /= static_cast<double>(n_items);

  double pe = 0.0;
  for (std::size_t c = 0; c < n_cats; ++c) {
    double pc = p_cat[c] / (static_cast<double>(n_items) * static_cast<double>(n_raters));
    pe += pc * pc;
  }
  if (pe >= 1.0) return {0.0, false};
  return {(p_bar - pe) / (1.0 - pe), true};
}

AgreementReport agreement_report(
    const Corpus& corpus,
    const std::map<std::string, std::array<AnnotatorLabels, 3>>& labels_by_thread) {
  std::vector<std::vector<long>> type_counts[3];
  std::vector<std::vector<long>> ipr_counts;
  std::vector<std::vector<long>> ipi_counts;

  for (const AnnotatedThread& at : corpus) {
    auto it = labels_by_thread.find(at.thread.id);
    if (it == labels_by_thread.end()) {
      throw std::invalid_argument("no annotator labels for thread " + at.thread.id);
    }
    const auto& raw = it->second;
    std::array<AnnotatorLabels, 3> a0;  // relations agree better after A0
    for (std::size_t a = 0; a < 3; ++a) a0[a] = a0_normalize(raw[a], at.thread).labels;

    for (std::size_t j = 0; j < at.thread.posts.size(); ++j) {
      const int n = static_cast<int>(at.thread.posts[j].sentences.size());
      for (int k = 0; k < n; ++k) {
        for (int t = 0; t < 3; ++t) {
          long yes = 0;
          for (const AnnotatorLabels& a : raw) {
            yes += a.types[j][k] == static_cast<AccType>(t) ? 1 : 0;
          }
          type_counts[t].push_back({yes, 3 - yes});
        }
      }
      for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
          if (s == t) continue;
          long yes = 0;
          for (const AnnotatorLabels& a : a0) {
            yes += (a.ipr_target[j][s] && *a.ipr_target[j][s] == t) ? 1 : 0;
          }
          ipr_counts.push_back({yes, 3 - yes});
        }
      }
      int parent = at.thread.posts[j].parent;
      if (parent < 0) continue;
      const int pn = static_cast<int>(at.thread.posts[parent].sentences.size());
      for (int s = 0; s < n; ++s) {
        for (int t = 0; t < pn; ++t) {
          long yes = 0;
          for (const AnnotatorLabels& a : raw) {
            yes += (a.ipi_target[j][s] && *a.ipi_target[j][s] == t) ? 1 : 0;
          }
          ipi_counts.push_back({yes, 3 - yes});
        }
      }
    }
  }

  AgreementReport report;
  const char* type_names[3] = {"Claim", "Premise", "NonArg"};
  for (int t = 0; t < 3; ++t) {
    report.by_category[type_names[t]] = {fleiss_kappa(type_counts[t]), type_counts[t].size()};
  }
  report.by_category["IPR"] = {fleiss_kappa(ipr_counts), ipr_counts.size()};
  if (!ipi_counts.empty()) {
    report.by_category["IPI"] = {fleiss_kappa(ipi_counts), ipi_counts.size()};
  }
  return report;
}

std::string agreement_report_to_json(const AgreementReport& report) {
  json j;
  for (const auto& [cat, entry] : report.by_category) {
    json e;
    if (entry.kappa.defined) {
      e["kappa"] = entry.kappa.value;
    } else {
      e["kappa"] = nullptr;
      e["note"] = "undefined: expected agreement is 1";
    }
    e["n_items"] = entry.n_items;
    j[cat] = std::move(e);
  }
  return j.dump(2);
}

namespace {

const Thread* find_thread(const Corpus& corpus, const std::string& id) {
  for (const AnnotatedThread& at : corpus) {
    if (at.thread.id == id) return &at.thread;
  }
  return nullptr;
}

}  // namespace

std::map<std::string, AnnotatorLabels> load_annotator_labels(const std::string& path,
                                                             const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open label file: " + path);
  std::map<std::string, AnnotatorLabels> out;
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
    const std::string thread_id = j.at("thread_id").get<std::string>();
    const Thread* thread = find_thread(corpus, thread_id);
    if (!thread) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": unknown thread " + thread_id);
    }
    AnnotatorLabels labels;
    labels.annotator_id = j.at("annotator_id").get<std::string>();
    for (const json& row : j.at("types")) {
      std::vector<AccType> tr;
      for (const json& v : row) tr.push_back(acc_type_from_string(v.get<std::string>()));
      labels.types.push_back(std::move(tr));
    }
    labels.ipr_target.resize(labels.types.size());
    labels.ipi_target.resize(labels.types.size());
    for (std::size_t p = 0; p < labels.types.size(); ++p) {
      labels.ipr_target[p].resize(labels.types[p].size());
      labels.ipi_target[p].resize(labels.types[p].size());
    }
    for (const json& l : j.at("ipr")) {
      int post = l.at(0).get<int>(), src = l.at(1).get<int>(), tgt = l.at(2).get<int>();
      if (post < 0 || post >= static_cast<int>(labels.ipr_target.size()) || src < 0 ||
          src >= static_cast<int>(labels.ipr_target[post].size())) {
        throw CorpusError(path + ":" + std::to_string(line_no) + ": relation index out of range");
      }
      if (labels.ipr_target[post][src]) {
        throw CorpusError(path + ":" + std::to_string(line_no) +
                          ": sentence has more than one outgoing relation");
      }
      labels.ipr_target[post][src] = tgt;
    }
    for (const json& l : j.at("ipi")) {
      int child = l.at(0).get<int>(), callout = l.at(1).get<int>(), tgt = l.at(3).get<int>();
      if (child < 0 || child >= static_cast<int>(labels.ipi_target.size()) || callout < 0 ||
          callout >= static_cast<int>(labels.ipi_target[child].size())) {
        throw CorpusError(path + ":" + std::to_string(line_no) +
                          ": interaction index out of range");
      }
      if (labels.ipi_target[child][callout]) {
        throw CorpusError(path + ":" + std::to_string(line_no) +
                          ": callout has more than one interaction");
      }
      labels.ipi_target[child][callout] = tgt;
    }
    check_labels(labels, *thread);
    out[thread_id] = std::move(labels);
  }
  return out;
}

void save_annotator_labels(const std::string& path, const Corpus& corpus,
                           const std::map<std::string, AnnotatorLabels>& by_thread) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write label file: " + path);
  for (const AnnotatedThread& at : corpus) {
    auto found = by_thread.find(at.thread.id);
    if (found == by_thread.end()) continue;
    const AnnotatorLabels& labels = found->second;
    json j;
    j["thread_id"] = at.thread.id;
    j["annotator_id"] = labels.annotator_id;
    json types = json::array();
    for (const auto& row : labels.types) {
      json r = json::array();
      for (AccType t : row) r.push_back(to_string(t));
      types.push_back(std::move(r));
    }
    j["types"] = std::move(types);
    json ipr = json::array();
    for (std::size_t p = 0; p < labels.ipr_target.size(); ++p) {
      for (std::size_t s = 0; s < labels.ipr_target[p].size(); ++s) {
        if (labels.ipr_target[p][s]) {
          ipr.push_back({static_cast<int>(p), static_cast<int>(s), *labels.ipr_target[p][s]});
        }
      }
    }
    j["ipr"] = std::move(ipr);
    json ipi = json::array();
    for (std::size_t p = 0; p < labels.ipi_target.size(); ++p) {
      for (std::size_t s = 0; s < labels.ipi_target[p].size(); ++s) {
        if (labels.ipi_target[p][s]) {
          ipi.push_back({static_cast<int>(p), static_cast<int>(s), at.thread.posts[p].parent,
                         *labels.ipi_target[p][s]});
        }
      }
    }
    j["ipi"] = std::move(ipi);
    out << j.dump() << "\n";
  }
}

}  // namespace pcpa
