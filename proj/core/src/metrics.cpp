#include "pcpa/metrics.hpp"

#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pcpa {

using json = nlohmann::ordered_json;

PairSet make_ipr_pairs(int n_sentences, const std::vector<IprPairLocal>& links) {
  PairSet ps;
  for (const IprPairLocal& l : links) ps.positives.insert({l.target, l.source});
  for (int t = 0; t < n_sentences; ++t) {
    for (int s = 0; s < n_sentences; ++s) {
      if (s == t) continue;
      DirectedPair p{t, s};
      if (!ps.positives.count(p)) ps.negatives.insert(p);
    }
  }
  return ps;
}

PairSet make_ipi_pairs(int parent_sentences, int child_sentences,
                       const std::vector<IpiPairLocal>& links) {
  PairSet ps;
  for (const IpiPairLocal& l : links) ps.positives.insert({l.target, l.callout});
  for (int t = 0; t < parent_sentences; ++t) {
    for (int s = 0; s < child_sentences; ++s) {
      DirectedPair p{t, s};
      if (!ps.positives.count(p)) ps.negatives.insert(p);
    }
  }
  return ps;
}

PairMetrics PairMetrics::from_counts(long tp, long fp, long fn) {
  PairMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                    : 0.0;
  return m;
}

PairMetrics pair_prf(const PairSet& gold, const std::set<DirectedPair>& predicted) {
  long tp = 0, fp = 0;
  for (const DirectedPair& p : predicted) {
    if (gold.positives.count(p)) {
      ++tp;
    } else if (gold.negatives.count(p)) {
      ++fp;
    }
    // pairs outside the universe were already mapped to self-pointers upstream
  }
  long fn = static_cast<long>(gold.positives.size()) - tp;
  return PairMetrics::from_counts(tp, fp, fn);
}

TypeMetrics type_f1(const std::vector<AccType>& gold, const std::vector<AccType>& predicted) {
  if (gold.size() != predicted.size()) {
    throw std::invalid_argument("type_f1: gold and predicted must align");
  }
  long tp[3] = {0, 0, 0}, fp[3] = {0, 0, 0}, fn[3] = {0, 0, 0};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    int g = static_cast<int>(gold[i]);
    int p = static_cast<int>(predicted[i]);
    if (g == p) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  TypeMetrics m;
  ClassMetrics* cs[3] = {&m.claim, &m.premise, &m.nonarg};
  for (int c = 0; c < 3; ++c) {
    PairMetrics tmp = PairMetrics::from_counts(tp[c], fp[c], fn[c]);
    cs[c]->tp = tmp.tp;
    cs[c]->fp = tmp.fp;
    cs[c]->fn = tmp.fn;
    cs[c]->precision = tmp.precision;
    cs[c]->recall = tmp.recall;
    cs[c]->f1 = tmp.f1;
  }
  return m;
}

namespace {

struct PairCounts {
  long tp = 0, fp = 0, fn = 0;
  void absorb(const PairMetrics& m) {
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
};

void accumulate_thread(const AnnotatedThread& at, const ThreadPrediction& pred,
                       PairCounts& ipr, PairCounts& ipi) {
  const Thread& thread = at.thread;
  for (std::size_t j = 0; j < thread.posts.size(); ++j) {
    std::vector<IprPairLocal> gold_links;
    for (const IprLink& l : at.gold.ipr) {
      if (l.post == static_cast<int>(j)) gold_links.push_back({l.source, l.target});
    }
    std::set<DirectedPair> predicted;
    for (std::size_t k = 0; k < pred.posts[j].size(); ++k) {
      if (pred.posts[j][k].ipr_target) {
        predicted.insert({*pred.posts[j][k].ipr_target, static_cast<int>(k)});
      }
    }
    PairSet ps = make_ipr_pairs(static_cast<int>(thread.posts[j].sentences.size()), gold_links);
    ipr.absorb(pair_prf(ps, predicted));
  }
  for (const auto& [parent, child] : thread.reply_pairs()) {
    std::vector<IpiPairLocal> gold_links;
    for (const IpiLink& l : at.gold.ipi) {
      if (l.child_post == child) gold_links.push_back({l.callout, l.target});
    }
    std::set<DirectedPair> predicted;
    for (std::size_t k = 0; k < pred.posts[child].size(); ++k) {
      if (pred.posts[child][k].ipi_target) {
        predicted.insert({*pred.posts[child][k].ipi_target, static_cast<int>(k)});
      }
    }
    PairSet ps = make_ipi_pairs(static_cast<int>(thread.posts[parent].sentences.size()),
                                static_cast<int>(thread.posts[child].sentences.size()),
                                gold_links);
    ipi.absorb(pair_prf(ps, predicted));
  }
}

}  // namespace

EvalReport evaluate_predictions(const Corpus& corpus,
                                const std::vector<ThreadPrediction>& predictions) {
  if (corpus.size() != predictions.size()) {
    throw std::invalid_argument("evaluate_predictions: one prediction per thread required");
  }
  PairCounts ipr, ipi;
  std::vector<AccType> gold_types, pred_types;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    accumulate_thread(corpus[i], predictions[i], ipr, ipi);
    for (std::size_t j = 0; j < corpus[i].thread.posts.size(); ++j) {
      for (std::size_t k = 0; k < corpus[i].thread.posts[j].sentences.size(); ++k) {
        gold_types.push_back(corpus[i].gold.types[j][k]);
        pred_types.push_back(predictions[i].posts[j][k].type);
      }
    }
  }
  EvalReport r;
  r.ipr = PairMetrics::from_counts(ipr.tp, ipr.fp, ipr.fn);
  r.ipi = PairMetrics::from_counts(ipi.tp, ipi.fp, ipi.fn);
  r.types = type_f1(gold_types, pred_types);
  return r;
}

namespace {
json pair_metrics_json(const PairMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
}
json class_metrics_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
}
}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  json j;
  j["ipr"] = pair_metrics_json(report.ipr);
  j["ipi"] = pair_metrics_json(report.ipi);
  j["type"] = {{"Claim", class_metrics_json(report.types.claim)},
               {"Premise", class_metrics_json(report.types.premise)},
               {"NonArg", class_metrics_json(report.types.nonarg)}};
  return j.dump(2);
}

std::vector<BucketRow> bucketed_eval(const Corpus& corpus,
                                     const std::vector<ThreadPrediction>& predictions,
                                     BucketBy by, const std::vector<long>& upper_edges) {
  if (corpus.size() != predictions.size()) {
    throw std::invalid_argument("bucketed_eval: one prediction per thread required");
  }
  if (upper_edges.empty()) throw std::invalid_argument("bucketed_eval: no bucket edges");
  for (std::size_t i = 1; i < upper_edges.size(); ++i) {
    if (upper_edges[i] <= upper_edges[i - 1]) {
      throw std::invalid_argument("bucketed_eval: edges must increase");
    }
  }

  const long domain_min = by == BucketBy::Depth ? 0 : 1;
  struct Acc {
    std::size_t n = 0;
    PairCounts ipr, ipi;
  };
  std::vector<Acc> accs(upper_edges.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    long value = by == BucketBy::Depth ? corpus[i].thread.max_depth()
                                       : static_cast<long>(corpus[i].thread.posts.size());
    std::size_t b = 0;
    while (b < upper_edges.size() && value > upper_edges[b]) ++b;
    if (b == upper_edges.size()) {
      throw std::invalid_argument("bucketed_eval: thread " + corpus[i].thread.id +
                                  " falls past the last edge");
    }
    Acc& acc = accs[b];
    ++acc.n;
    accumulate_thread(corpus[i], predictions[i], acc.ipr, acc.ipi);
  }

  std::vector<BucketRow> rows;
  long lo = domain_min;
  for (std::size_t b = 0; b < upper_edges.size(); ++b) {
    if (accs[b].n > 0) {
      BucketRow row;
      row.lo = lo;
      row.hi = upper_edges[b];
      row.n_threads = accs[b].n;
      row.ipr = PairMetrics::from_counts(accs[b].ipr.tp, accs[b].ipr.fp, accs[b].ipr.fn);
      row.ipi = PairMetrics::from_counts(accs[b].ipi.tp, accs[b].ipi.fp, accs[b].ipi.fn);
      rows.push_back(row);
    }
    lo = upper_edges[b] + 1;
  }
  return rows;
}

std::string buckets_to_csv(const std::vector<BucketRow>& rows, BucketBy by) {
  std::ostringstream out;
  out << (by == BucketBy::Depth ? "depth_lo,depth_hi" : "posts_lo,posts_hi")
      << ",n_threads,ipr_precision,ipr_recall,ipr_f1,ipr_tp,ipr_fp,ipr_fn"
      << ",ipi_precision,ipi_recall,ipi_f1,ipi_tp,ipi_fp,ipi_fn\n";
  for (const BucketRow& r : rows) {
    out << r.lo << "," << r.hi << "," << r.n_threads << "," << r.ipr.precision << ","
        << r.ipr.recall << "," << r.ipr.f1 << "," << r.ipr.tp << "," << r.ipr.fp << ","
        << r.ipr.fn << "," << r.ipi.precision << "," << r.ipi.recall << "," << r.ipi.f1 << ","
        << r.ipi.tp << "," << r.ipi.fp << "," << r.ipi.fn << "\n";
  }
  return out.str();
}

}  // namespace pcpa
