#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pcpa/annotation.hpp"
#include "pcpa/corpus.hpp"
#include "pcpa/synthetic.hpp"
#include "helpers.hpp"

using namespace pcpa;

namespace {

std::string cli_path() {
  const char* p = std::getenv("PCPA_CLI");
  return p ? p : "";
}

int run_cli(const std::string& args) {
  std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli round trip: gen, stats, train, eval" * doctest::skip(cli_path().empty())) {
  REQUIRE(run_cli("gen --threads 16 --seed 3 --tokens-mean 7 --content-vocab 200 "
                  "--filler-vocab 100 -o /tmp/pcpa_cli_c.jsonl") == 0);
  Corpus corpus = load_corpus("/tmp/pcpa_cli_c.jsonl");
  CHECK(corpus.size() == 16);

  SUBCASE("same seed, byte-identical corpus") {
    REQUIRE(run_cli("gen --threads 16 --seed 3 --tokens-mean 7 --content-vocab 200 "
                    "--filler-vocab 100 -o /tmp/pcpa_cli_c2.jsonl") == 0);
    CHECK(file_bytes("/tmp/pcpa_cli_c.jsonl") == file_bytes("/tmp/pcpa_cli_c2.jsonl"));
    std::remove("/tmp/pcpa_cli_c2.jsonl");
  }

  SUBCASE("stats runs") {
    CHECK(run_cli("stats /tmp/pcpa_cli_c.jsonl -o /tmp/pcpa_cli_stats.json") == 0);
    std::string text = file_bytes("/tmp/pcpa_cli_stats.json");
    CHECK(text.find("\"n_threads\": 16") != std::string::npos);
    std::remove("/tmp/pcpa_cli_stats.json");
  }

  SUBCASE("train writes checkpoint and history, eval consumes them") {
    REQUIRE(run_cli("train --corpus /tmp/pcpa_cli_c.jsonl --epochs 2 --input-dim 10 "
                    "--hidden-dim 5 --dropout 0 --seed 4 --quiet "
                    "-o /tmp/pcpa_cli_m.ckpt --history /tmp/pcpa_cli_h.jsonl") == 0);
    std::string history = file_bytes("/tmp/pcpa_cli_h.jsonl");
    CHECK(history.find("\"epoch\":1") != std::string::npos);
    CHECK(history.find("\"train_loss\"") != std::string::npos);

    CHECK(run_cli("eval --model /tmp/pcpa_cli_m.ckpt --corpus /tmp/pcpa_cli_c.jsonl "
                  "-o /tmp/pcpa_cli_e.json --bucket depth "
                  "--bucket-csv /tmp/pcpa_cli_b.csv") == 0);
    std::string metrics = file_bytes("/tmp/pcpa_cli_e.json");
    CHECK(metrics.find("\"ipr\"") != std::string::npos);
    CHECK(metrics.find("\"config\"") != std::string::npos);  // reproducibility header
    std::string buckets = file_bytes("/tmp/pcpa_cli_b.csv");
    CHECK(buckets.find("depth_lo,depth_hi") != std::string::npos);

    // determinism across the whole train+eval pipeline
    REQUIRE(run_cli("train --corpus /tmp/pcpa_cli_c.jsonl --epochs 2 --input-dim 10 "
                    "--hidden-dim 5 --dropout 0 --seed 4 --quiet "
                    "-o /tmp/pcpa_cli_m2.ckpt --history /tmp/pcpa_cli_h2.jsonl") == 0);
    CHECK(file_bytes("/tmp/pcpa_cli_m.ckpt") == file_bytes("/tmp/pcpa_cli_m2.ckpt"));
    REQUIRE(run_cli("eval --model /tmp/pcpa_cli_m2.ckpt --corpus /tmp/pcpa_cli_c.jsonl "
                    "-o /tmp/pcpa_cli_e2.json") == 0);
    // metrics differ only in the config echo (model path), so compare reports
    std::string m1 = file_bytes("/tmp/pcpa_cli_e.json");
    std::string m2 = file_bytes("/tmp/pcpa_cli_e2.json");
    CHECK(m1.substr(0, m1.find("\"model\"")) == m2.substr(0, m2.find("\"model\"")));
    for (const char* f : {"/tmp/pcpa_cli_m.ckpt", "/tmp/pcpa_cli_h.jsonl",
                          "/tmp/pcpa_cli_e.json", "/tmp/pcpa_cli_b.csv",
                          "/tmp/pcpa_cli_m2.ckpt", "/tmp/pcpa_cli_h2.jsonl",
                          "/tmp/pcpa_cli_e2.json"}) {
      std::remove(f);
    }
  }

  SUBCASE("eval on a one-depth corpus yields a single bucket row") {
    REQUIRE(run_cli("gen --threads 6 --seed 5 --posts-mean 1.0 -o /tmp/pcpa_cli_flat.jsonl") ==
            0);
    REQUIRE(run_cli("train --corpus /tmp/pcpa_cli_flat.jsonl --no-split --epochs 1 "
                    "--input-dim 8 --hidden-dim 4 --dropout 0 --quiet "
                    "-o /tmp/pcpa_cli_fm.ckpt --history /tmp/pcpa_cli_fh.jsonl") == 0);
    REQUIRE(run_cli("eval --model /tmp/pcpa_cli_fm.ckpt --corpus /tmp/pcpa_cli_flat.jsonl "
                    "-o /tmp/pcpa_cli_fe.json --bucket depth "
                    "--bucket-csv /tmp/pcpa_cli_fb.csv") == 0);
    std::string csv = file_bytes("/tmp/pcpa_cli_fb.csv");
    int lines = 0;
    for (char c : csv) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 3);  // config comment + header + one row
    for (const char* f : {"/tmp/pcpa_cli_flat.jsonl", "/tmp/pcpa_cli_fm.ckpt",
                          "/tmp/pcpa_cli_fh.jsonl", "/tmp/pcpa_cli_fe.json",
                          "/tmp/pcpa_cli_fb.csv"}) {
      std::remove(f);
    }
  }

  std::remove("/tmp/pcpa_cli_c.jsonl");
}

TEST_CASE("cli aggregate and kappa" * doctest::skip(cli_path().empty())) {
  Corpus corpus = generate_synthetic(test::tiny_generator(8), 77);
  save_corpus("/tmp/pcpa_cli_k.jsonl", corpus);

  // three annotators: two faithful to gold, one noisy
  std::mt19937_64 rng(5);
  for (int a = 0; a < 3; ++a) {
    std::map<std::string, AnnotatorLabels> labels;
    for (const auto& at : corpus) {
      AnnotatorLabels lab;
      lab.annotator_id = "a" + std::to_string(a);
      lab.types = at.gold.types;
      lab.ipr_target.resize(at.thread.posts.size());
      lab.ipi_target.resize(at.thread.posts.size());
      for (std::size_t j = 0; j < at.thread.posts.size(); ++j) {
        lab.ipr_target[j].resize(at.thread.posts[j].sentences.size());
        lab.ipi_target[j].resize(at.thread.posts[j].sentences.size());
      }
      for (const IprLink& l : at.gold.ipr) lab.ipr_target[l.post][l.source] = l.target;
      for (const IpiLink& l : at.gold.ipi) lab.ipi_target[l.child_post][l.callout] = l.target;
      if (a == 2) {  // noisy annotator flips some types
        for (auto& post : lab.types) {
          for (auto& ty : post) {
            if (rng() % 4 == 0) ty = static_cast<AccType>(rng() % 3);
          }
        }
      }
      labels[at.thread.id] = std::move(lab);
    }
    save_annotator_labels("/tmp/pcpa_cli_lab" + std::to_string(a) + ".jsonl", corpus, labels);
  }

  CHECK(run_cli("aggregate --corpus /tmp/pcpa_cli_k.jsonl --labels /tmp/pcpa_cli_lab0.jsonl "
                "/tmp/pcpa_cli_lab1.jsonl /tmp/pcpa_cli_lab2.jsonl "
                "-o /tmp/pcpa_cli_gold.jsonl") == 0);
  Corpus gold = load_corpus("/tmp/pcpa_cli_gold.jsonl");  // loader re-validates
  REQUIRE(gold.size() == corpus.size());
  // two faithful annotators outvote the noisy one
  for (std::size_t i = 0; i < gold.size(); ++i) {
    CHECK(gold[i].gold.types == corpus[i].gold.types);
    CHECK(gold[i].gold.ipr == corpus[i].gold.ipr);
  }

  CHECK(run_cli("kappa --corpus /tmp/pcpa_cli_k.jsonl --labels /tmp/pcpa_cli_lab0.jsonl "
                "/tmp/pcpa_cli_lab1.jsonl /tmp/pcpa_cli_lab2.jsonl "
                "-o /tmp/pcpa_cli_kappa.json") == 0);
  std::string report = file_bytes("/tmp/pcpa_cli_kappa.json");
  for (const char* cat : {"Claim", "Premise", "NonArg", "IPR", "IPI"}) {
    CHECK(report.find(cat) != std::string::npos);
  }
  CHECK(report.find("n_items") != std::string::npos);

  for (const char* f : {"/tmp/pcpa_cli_k.jsonl", "/tmp/pcpa_cli_lab0.jsonl",
                        "/tmp/pcpa_cli_lab1.jsonl", "/tmp/pcpa_cli_lab2.jsonl",
                        "/tmp/pcpa_cli_gold.jsonl", "/tmp/pcpa_cli_kappa.json"}) {
    std::remove(f);
  }
}

TEST_CASE("cli exit codes" * doctest::skip(cli_path().empty())) {
  CHECK(run_cli("nosuchcommand") == 2);
  CHECK(run_cli("gen --threads 0 -o /tmp/pcpa_cli_x.jsonl") == 2);
  CHECK(run_cli("train --corpus /tmp/pcpa_cli_missing.jsonl --alpha 0.9 --beta 0.2") == 2);
  CHECK(run_cli("eval --model /tmp/pcpa_cli_missing.ckpt --corpus /tmp/pcpa_cli_missing.jsonl") ==
        1);
  std::ofstream cfg("/tmp/pcpa_cli_bad.ini");
  cfg << "[gen]\nthreads=5\nnot_a_real_key=1\n";
  cfg.close();
  CHECK(run_cli("--config /tmp/pcpa_cli_bad.ini gen") == 2);
  std::remove("/tmp/pcpa_cli_bad.ini");
}

TEST_CASE("cli gradcheck reports a small error" * doctest::skip(cli_path().empty())) {
  CHECK(run_cli("gradcheck") == 0);
}
