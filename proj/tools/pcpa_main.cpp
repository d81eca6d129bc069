#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "pcpa/annotation.hpp"
#include "pcpa/checkpoint.hpp"
#include "pcpa/corpus.hpp"
#include "pcpa/metrics.hpp"
#include "pcpa/model.hpp"
#include "pcpa/optim.hpp"
#include "pcpa/synthetic.hpp"
#include "pcpa/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pcpa;

namespace {

// relative outputs land under PCPA_OUT_DIR when it is set
std::string resolve_out(const std::string& path) {
  const char* base = std::getenv("PCPA_OUT_DIR");
  if (!base || !*base || path.empty() || fs::path(path).is_absolute()) return path;
  fs::create_directories(base);
  return (fs::path(base) / path).string();
}

json resolved_config(const CLI::App& cmd) {
  json j;
  for (const CLI::Option* opt : cmd.get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    // output locations do not shape the artifact's content; keeping them out
    // of the embedded header keeps equal runs byte-identical
    if (name == "out" || name == "history" || name == "vocab-out" || name == "bucket-csv" ||
        name == "quiet") {
      continue;
    }
    if (!opt->results().empty()) {
      std::string joined;
      for (const std::string& r : opt->results()) {
        if (!joined.empty()) joined += ",";
        joined += r;
      }
      j[name] = joined;
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void log_config(const CLI::App& cmd) {
  std::cerr << "# " << cmd.get_name() << " config: " << resolved_config(cmd).dump() << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct GenArgs {
  GeneratorConfig cfg;
  std::uint64_t seed = 7;
  std::string out = "corpus.jsonl";
};

struct HyperArgs {
  HyperParams hp;
  bool unconstrained = false;
  bool no_separators = false;
};

void add_hyper_flags(CLI::App* cmd, HyperArgs& a) {
  cmd->add_option("--alpha", a.hp.alpha, "relation task weight");
  cmd->add_option("--beta", a.hp.beta, "interaction task weight");
  cmd->add_option("--input-dim", a.hp.input_dim, "sentence embedding size");
  cmd->add_option("--hidden-dim", a.hp.hidden_dim, "LSTM size per direction");
  cmd->add_option("--dropout", a.hp.dropout, "drop probability on encoder inputs/outputs");
  cmd->add_option("--batch", a.hp.batch_size, "threads per mini-batch");
  cmd->add_option("--epochs", a.hp.epochs, "training epochs");
  cmd->add_option("--seed", a.hp.seed, "run seed (init, shuffle, dropout, split)");
  cmd->add_option("--vocab-cap", a.hp.vocab_cap, "vocabulary size cap");
  cmd->add_option("--lr", a.hp.lr, "Adam learning rate");
  cmd->add_option("--grad-clip", a.hp.grad_clip, "global-norm gradient clip (0 = off)");
  cmd->add_flag("--unconstrained", a.unconstrained,
                "score all thread sentences instead of the constrained slot sets");
  cmd->add_flag("--no-separators", a.no_separators, "linearize without separator items");
  cmd->add_flag("--shared-separator", a.hp.shared_separator,
                "one separator symbol for depth and post boundaries");
  cmd->add_flag("--param-share", a.hp.param_share,
                "share the relation head's attention with the interaction head");
  cmd->add_flag("--ipi-mask", a.hp.ipi_mask_noncallouts,
                "drop self-labeled child sentences from the interaction loss");
}

HyperParams finish_hyper(const HyperArgs& a) {
  HyperParams hp = a.hp;
  hp.constrained = !a.unconstrained;
  hp.use_separators = !a.no_separators;
  hp.validate();
  return hp;
}

std::string corpus_header(const CLI::App& cmd, std::uint64_t seed) {
  json j;
  j["tool"] = "pcpa " + cmd.get_name();
  j["seed"] = seed;
  j["config"] = resolved_config(cmd);
  return j.dump();
}

EvalReport run_eval(const PcpaModel& model, const Corpus& corpus) {
  return evaluate_predictions(corpus, predict_corpus(model, corpus));
}

json report_row(const EvalReport& r) {
  return {{"claim_f1", r.types.claim.f1},     {"premise_f1", r.types.premise.f1},
          {"nonarg_f1", r.types.nonarg.f1},   {"ipr_precision", r.ipr.precision},
          {"ipr_recall", r.ipr.recall},       {"ipr_f1", r.ipr.f1},
          {"ipi_precision", r.ipi.precision}, {"ipi_recall", r.ipi.recall},
          {"ipi_f1", r.ipi.f1}};
}

AnnotatedThread gradcheck_thread() {
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

std::array<AnnotatorLabels, 3> labels_for(const std::map<std::string, AnnotatorLabels>* files,
                                          const Thread& thread) {
  std::array<AnnotatorLabels, 3> out;
  for (int a = 0; a < 3; ++a) {
    auto it = files[a].find(thread.id);
    if (it == files[a].end()) {
      throw std::runtime_error("annotator file " + std::to_string(a + 1) +
                               " has no labels for thread " + thread.id);
    }
    out[a] = it->second;
  }
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Argument mining on discussion threads with constrained pointer heads"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; sections name subcommands");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.option_defaults()->always_capture_default();

  // ---- gen ----
  GenArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate a synthetic corpus");
  cmd_gen->add_option("--threads", gen.cfg.n_threads, "number of threads");
  cmd_gen->add_option("--seed", gen.seed, "generator seed");
  cmd_gen->add_option("--posts-mean", gen.cfg.posts_per_thread_mean, "mean posts per thread");
  cmd_gen->add_option("--sentences-mean", gen.cfg.sentences_per_post_mean,
                      "mean sentences per post");
  cmd_gen->add_option("--tokens-mean", gen.cfg.tokens_per_sentence_mean,
                      "mean tokens per sentence");
  cmd_gen->add_option("--root-bias", gen.cfg.root_reply_bias,
                      "root weight when picking reply targets");
  cmd_gen->add_option("--ipi-density", gen.cfg.ipi_per_reply_pair,
                      "interaction probability per reply pair");
  cmd_gen->add_option("--claim-ratio", gen.cfg.claim_ratio, "claim share of sentences");
  cmd_gen->add_option("--premise-ratio", gen.cfg.premise_ratio, "premise share of sentences");
  cmd_gen->add_option("--content-vocab", gen.cfg.content_vocab, "content token count");
  cmd_gen->add_option("--filler-vocab", gen.cfg.filler_vocab, "filler token count");
  cmd_gen->add_option("--authors", gen.cfg.n_authors, "author pool size");
  cmd_gen->add_option("--topic-tokens", gen.cfg.topic_tokens, "tokens defining a claim topic");
  cmd_gen->add_option("--min-shared", gen.cfg.min_shared_tokens,
                      "guaranteed shared tokens across a link");
  cmd_gen->add_option("-o,--out", gen.out, "output corpus path");

  // ---- stats ----
  std::string stats_corpus;
  std::string stats_out;
  CLI::App* cmd_stats = app.add_subcommand("stats", "corpus summary statistics");
  cmd_stats->add_option("corpus", stats_corpus, "corpus jsonl")->required();
  cmd_stats->add_option("-o,--out", stats_out, "also write the JSON here");

  // ---- aggregate ----
  std::string agg_corpus, agg_out = "gold.jsonl";
  std::vector<std::string> agg_labels, agg_ipi_labels;
  CLI::App* cmd_agg = app.add_subcommand(
      "aggregate", "build the gold standard from three annotators' labels");
  cmd_agg->add_option("--corpus", agg_corpus, "corpus jsonl (threads; gold is replaced)")
      ->required();
  cmd_agg->add_option("--labels", agg_labels, "three annotator label files (types + relations)")
      ->expected(3)
      ->required();
  cmd_agg->add_option("--ipi-labels", agg_ipi_labels,
                      "three phase-two label files (defaults to --labels)")
      ->expected(3);
  cmd_agg->add_option("-o,--out", agg_out, "output corpus with aggregated gold");

  // ---- kappa ----
  std::string kap_corpus, kap_out;
  std::vector<std::string> kap_labels;
  CLI::App* cmd_kap = app.add_subcommand("kappa", "inter-annotator agreement report");
  cmd_kap->add_option("--corpus", kap_corpus, "corpus jsonl")->required();
  cmd_kap->add_option("--labels", kap_labels, "three annotator label files")
      ->expected(3)
      ->required();
  cmd_kap->add_option("-o,--out", kap_out, "write the report JSON here (default stdout)");

  // ---- train ----
  HyperArgs train_args;
  std::string train_corpus, train_ckpt = "model.ckpt.json";
  std::string train_history = "history.jsonl", train_vocab_out;
  double train_split = 0.8;
  bool train_no_split = false;
  bool train_quiet = false;
  CLI::App* cmd_train = app.add_subcommand("train", "train a model");
  cmd_train->add_option("--corpus", train_corpus, "corpus jsonl")->required();
  add_hyper_flags(cmd_train, train_args);
  cmd_train->add_option("--split-ratio", train_split, "train fraction of the hash split");
  cmd_train->add_flag("--no-split", train_no_split, "train on the whole corpus");
  cmd_train->add_option("-o,--out", train_ckpt, "checkpoint path");
  cmd_train->add_option("--history", train_history, "epoch history jsonl");
  cmd_train->add_option("--vocab-out", train_vocab_out, "also write the vocabulary JSON");
  cmd_train->add_flag("--quiet", train_quiet, "no per-epoch progress lines");

  // ---- eval ----
  std::string eval_model, eval_corpus, eval_out = "metrics.json";
  std::string eval_bucket, eval_bucket_csv = "buckets.csv", eval_part = "all";
  double eval_split = 0.8;
  std::uint64_t eval_split_seed = 0;
  bool eval_split_seed_set = false;
  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  cmd_eval->add_option("--model", eval_model, "checkpoint path")->required();
  cmd_eval->add_option("--corpus", eval_corpus, "corpus jsonl")->required();
  cmd_eval->add_option("--split", eval_part, "evaluate on: all | train | test")
      ->check(CLI::IsMember({"all", "train", "test"}));
  cmd_eval->add_option("--split-ratio", eval_split, "train fraction of the hash split");
  cmd_eval->add_option("--split-seed", eval_split_seed, "split seed (default: model seed)")
      ->trigger_on_parse()
      ->each([&](const std::string&) { eval_split_seed_set = true; });
  cmd_eval->add_option("-o,--out", eval_out, "metrics JSON path");
  cmd_eval->add_option("--bucket", eval_bucket, "bucketed curves by: depth | posts")
      ->check(CLI::IsMember({"depth", "posts"}));
  cmd_eval->add_option("--bucket-csv", eval_bucket_csv, "bucketed CSV path");

  // ---- sweep ----
  HyperArgs sweep_args;
  std::string sweep_corpus, sweep_out = "sweep.csv";
  int sweep_seeds = 1;
  double sweep_split = 0.8;
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "ablation grid: constraints x separators x sharing x task weights");
  cmd_sweep->add_option("--corpus", sweep_corpus, "corpus jsonl")->required();
  add_hyper_flags(cmd_sweep, sweep_args);
  cmd_sweep->add_option("--seeds", sweep_seeds, "seeds per grid point");
  cmd_sweep->add_option("--split-ratio", sweep_split, "train fraction of the hash split");
  cmd_sweep->add_option("-o,--out", sweep_out, "comparison table CSV");

  // ---- gradcheck ----
  HyperArgs gc_args;
  gc_args.hp.input_dim = 8;
  gc_args.hp.hidden_dim = 4;
  gc_args.hp.dropout = 0.0;
  gc_args.hp.vocab_cap = 50;
  gc_args.hp.seed = 22;
  double gc_h = 4e-3;
  std::size_t gc_coords = 250;
  bool gc_plain = false;
  CLI::App* cmd_gc = app.add_subcommand(
      "gradcheck", "finite-difference check of the joint loss gradients");
  add_hyper_flags(cmd_gc, gc_args);
  cmd_gc->add_option("--step", gc_h, "finite-difference step");
  cmd_gc->add_option("--coords", gc_coords, "sampled coordinates");
  cmd_gc->add_flag("--plain", gc_plain, "plain central differences (no extrapolation)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help text or the parse error
    return code == 0 ? 0 : 2;
  }

  if (cmd_gen->parsed()) {
    log_config(*cmd_gen);
    Corpus corpus = generate_synthetic(gen.cfg, gen.seed);
    std::string out = resolve_out(gen.out);
    save_corpus(out, corpus, corpus_header(*cmd_gen, gen.seed));
    std::cerr << "wrote " << corpus.size() << " threads to " << out << "\n";
    return 0;
  }

  if (cmd_stats->parsed()) {
    log_config(*cmd_stats);
    CorpusStats s = compute_stats(load_corpus(stats_corpus));
    std::cout << stats_to_json(s) << "\n";
    if (!stats_out.empty()) {
      json j = json::parse(stats_to_json(s));
      j["_config"] = resolved_config(*cmd_stats);
      write_text(resolve_out(stats_out), j.dump(2) + "\n");
    }
    return 0;
  }

  if (cmd_agg->parsed()) {
    log_config(*cmd_agg);
    Corpus corpus = load_corpus(agg_corpus);
    std::map<std::string, AnnotatorLabels> files[3], ipi_files[3];
    for (int a = 0; a < 3; ++a) files[a] = load_annotator_labels(agg_labels[a], corpus);
    if (agg_ipi_labels.empty()) {
      for (int a = 0; a < 3; ++a) ipi_files[a] = files[a];
    } else {
      for (int a = 0; a < 3; ++a) ipi_files[a] = load_annotator_labels(agg_ipi_labels[a], corpus);
    }
    std::size_t notes = 0;
    for (AnnotatedThread& at : corpus) {
      AggregateResult res =
          aggregate_gold(at.thread, labels_for(files, at.thread), labels_for(ipi_files, at.thread));
      at.gold = std::move(res.gold);
      for (const std::string& note : res.notes) {
        std::cerr << "note: " << note << "\n";
        ++notes;
      }
    }
    std::string out = resolve_out(agg_out);
    save_corpus(out, corpus, corpus_header(*cmd_agg, 0));
    std::cerr << "wrote aggregated gold for " << corpus.size() << " threads to " << out << " ("
              << notes << " cycle notes)\n";
    return 0;
  }

  if (cmd_kap->parsed()) {
    log_config(*cmd_kap);
    Corpus corpus = load_corpus(kap_corpus);
    std::map<std::string, AnnotatorLabels> files[3];
    for (int a = 0; a < 3; ++a) files[a] = load_annotator_labels(kap_labels[a], corpus);
    std::map<std::string, std::array<AnnotatorLabels, 3>> by_thread;
    for (const AnnotatedThread& at : corpus) {
      by_thread[at.thread.id] = labels_for(files, at.thread);
    }
    json j = json::parse(agreement_report_to_json(agreement_report(corpus, by_thread)));
    if (kap_out.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      j["_config"] = resolved_config(*cmd_kap);
      write_text(resolve_out(kap_out), j.dump(2) + "\n");
      std::cerr << "wrote " << resolve_out(kap_out) << "\n";
    }
    return 0;
  }

  if (cmd_train->parsed()) {
    log_config(*cmd_train);
    HyperParams hp = finish_hyper(train_args);
    Corpus corpus = load_corpus(train_corpus);
    Corpus train_set, test_set;
    if (train_no_split) {
      train_set = corpus;
    } else {
      std::tie(train_set, test_set) = split_corpus(corpus, train_split, hp.seed);
    }
    std::cerr << "training on " << train_set.size() << " threads, testing on "
              << test_set.size() << "\n";
    Vocabulary vocab = Vocabulary::build(train_set, hp.vocab_cap);
    PcpaModel model(hp, vocab);
    model.init_params(hp.seed);
    TrainOptions opts;
    opts.log = train_quiet ? nullptr : &std::cerr;
    std::vector<EpochRecord> history =
        train_model(model, train_set, test_set.empty() ? nullptr : &test_set, opts);

    std::string ckpt = resolve_out(train_ckpt);
    save_checkpoint(ckpt, model);
    std::string hist = resolve_out(train_history);
    {
      std::ofstream out(hist);
      if (!out) throw std::runtime_error("cannot write " + hist);
      json meta;
      meta["_meta"] = {{"tool", "pcpa train"}, {"config", resolved_config(*cmd_train)}};
      out << meta.dump() << "\n";
      for (const EpochRecord& rec : history) out << epoch_record_to_json(rec) << "\n";
    }
    if (!train_vocab_out.empty()) vocab.save(resolve_out(train_vocab_out));
    if (!history.empty() && history.back().test_eval) {
      std::cerr << "final test: " << report_row(*history.back().test_eval).dump() << "\n";
    }
    std::cerr << "wrote " << ckpt << " and " << hist << "\n";
    return 0;
  }

  if (cmd_eval->parsed()) {
    log_config(*cmd_eval);
    PcpaModel model = load_checkpoint(eval_model);
    Corpus corpus = load_corpus(eval_corpus);
    if (eval_part != "all") {
      std::uint64_t seed = eval_split_seed_set ? eval_split_seed : model.hyper().seed;
      auto [train_set, test_set] = split_corpus(corpus, eval_split, seed);
      corpus = eval_part == "train" ? std::move(train_set) : std::move(test_set);
    }
    if (corpus.empty()) throw std::runtime_error("eval: selected corpus part is empty");
    std::vector<ThreadPrediction> preds = predict_corpus(model, corpus);
    EvalReport report = evaluate_predictions(corpus, preds);
    json j = json::parse(eval_report_to_json(report));
    j["n_threads"] = corpus.size();
    j["model"] = eval_model;
    j["config"] = resolved_config(*cmd_eval);
    std::string out = resolve_out(eval_out);
    write_text(out, j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";

    if (!eval_bucket.empty()) {
      BucketBy by = eval_bucket == "depth" ? BucketBy::Depth : BucketBy::PostCount;
      long max_value = 0;
      for (const AnnotatedThread& at : corpus) {
        long v = by == BucketBy::Depth ? at.thread.max_depth()
                                       : static_cast<long>(at.thread.posts.size());
        max_value = std::max(max_value, v);
      }
      std::vector<long> edges;
      if (by == BucketBy::Depth) {
        for (long d = 0; d <= max_value; ++d) edges.push_back(d);
      } else {
        for (long e = 5; e < max_value + 5; e += 5) edges.push_back(e);
      }
      auto rows = bucketed_eval(corpus, preds, by, edges);
      std::string csv = "# config: " + resolved_config(*cmd_eval).dump() + "\n" +
                        buckets_to_csv(rows, by);
      write_text(resolve_out(eval_bucket_csv), csv);
      std::cerr << "wrote " << resolve_out(eval_bucket_csv) << " (" << rows.size()
                << " buckets)\n";
    }
    return 0;
  }

  if (cmd_sweep->parsed()) {
    log_config(*cmd_sweep);
    Corpus corpus = load_corpus(sweep_corpus);
    HyperParams base = finish_hyper(sweep_args);
    auto [train_set, test_set] = split_corpus(corpus, sweep_split, base.seed);
    if (train_set.empty() || test_set.empty()) {
      throw std::runtime_error("sweep: split produced an empty part");
    }
    std::ostringstream csv;
    csv << "# config: " << resolved_config(*cmd_sweep).dump() << "\n";
    csv << "model,constrained,separators,param_share,alpha,beta,seed,"
        << "claim_f1,premise_f1,nonarg_f1,ipr_precision,ipr_f1,ipi_precision,ipi_f1\n";
    for (bool constrained : {true, false}) {
      for (bool separators : {true, false}) {
        for (bool share : {false, true}) {
          for (double ab : {1.0 / 3.0, 0.15}) {
            for (int s = 0; s < sweep_seeds; ++s) {
              HyperParams hp = base;
              hp.constrained = constrained;
              hp.use_separators = separators;
              hp.param_share = share;
              hp.alpha = hp.beta = ab;
              hp.seed = base.seed + static_cast<std::uint64_t>(s);
              Vocabulary vocab = Vocabulary::build(train_set, hp.vocab_cap);
              PcpaModel model(hp, vocab);
              model.init_params(hp.seed);
              TrainOptions opts;
              opts.eval_each_epoch = false;
              train_model(model, train_set, nullptr, opts);
              EvalReport r = run_eval(model, test_set);
              std::string name = std::string(constrained ? "pcpa" : "pn-global") +
                                 (separators ? "" : " w/o separator") +
                                 (share ? " param-share" : "") +
                                 (ab < 0.2 ? " hyp" : "");
              csv << name << "," << constrained << "," << separators << "," << share << ","
                  << hp.alpha << "," << hp.beta << "," << hp.seed << "," << r.types.claim.f1
                  << "," << r.types.premise.f1 << "," << r.types.nonarg.f1 << ","
                  << r.ipr.precision << "," << r.ipr.f1 << "," << r.ipi.precision << ","
                  << r.ipi.f1 << "\n";
              std::cerr << name << " seed " << hp.seed << ": ipr_f1=" << r.ipr.f1
                        << " ipi_f1=" << r.ipi.f1 << "\n";
            }
          }
        }
      }
    }
    write_text(resolve_out(sweep_out), csv.str());
    std::cout << csv.str();
    std::cerr << "wrote " << resolve_out(sweep_out) << "\n";
    return 0;
  }

  if (cmd_gc->parsed()) {
    log_config(*cmd_gc);
    HyperParams hp = finish_hyper(gc_args);
    AnnotatedThread at = gradcheck_thread();
    Corpus corpus = {at};
    Vocabulary vocab = Vocabulary::build(corpus, hp.vocab_cap);
    PcpaModel model(hp, vocab);
    model.init_params(hp.seed);
    double err = grad_check(
        [&](ParamStore&) {
          Tape t;
          Var loss = model.thread_loss(t, at.thread, at.gold, false, nullptr);
          t.backward(loss);
          return t.value(loss)[0];
        },
        model.params(), gc_h, gc_coords, 321, !gc_plain);
    std::cout << "max relative error: " << err << "\n";
    return err < 1e-5 ? 0 : 1;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
