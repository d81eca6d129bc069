#include "pcpa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pcpa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// hand-rolled samplers keep the output identical across standard libraries
std::size_t shifted_geometric(std::mt19937_64& rng, double mean) {
  double p = 1.0 / mean;
  if (p >= 1.0) return 1;
  double u = u01(rng);
  return 1 + static_cast<std::size_t>(std::floor(std::log1p(-u) / std::log1p(-p)));
}

std::size_t poisson(std::mt19937_64& rng, double lambda) {
  double limit = std::exp(-lambda);
  std::size_t k = 0;
  double prod = u01(rng);
  while (prod > limit) {
    ++k;
    prod *= u01(rng);
  }
  return k;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(u01(rng) * static_cast<double>(n)) % n;
}

bool is_content_token(const std::string& tok) { return !tok.empty() && tok[0] == 'w'; }

struct ThreadGen {
  const GeneratorConfig& cfg;
  std::mt19937_64 rng;
  std::vector<std::string> pool;  // per-thread content pool, may be empty

  std::string global_content_token() {
    return "w" + std::to_string(uniform_index(rng, cfg.content_vocab));
  }
  std::string content_token() {
    if (!pool.empty()) return pool[uniform_index(rng, pool.size())];
    return global_content_token();
  }
  std::string filler_token() { return "f" + std::to_string(uniform_index(rng, cfg.filler_vocab)); }

  /// n fresh content tokens, disjoint from `taken`. Falls back to the whole
  /// content vocabulary when a small thread pool runs out of fresh tokens.
  std::vector<std::string> distinct_content(int n, const std::vector<std::string>& taken) {
    std::vector<std::string> out;
    std::size_t attempts = 0;
    while (static_cast<int>(out.size()) < n) {
      std::string t = ++attempts > 64 ? global_content_token() : content_token();
      if (std::find(out.begin(), out.end(), t) != out.end() ||
          std::find(taken.begin(), taken.end(), t) != taken.end()) {
        continue;
      }
      out.push_back(t);
    }
    return out;
  }

  std::size_t sentence_count() {
    std::size_t n = std::max<std::size_t>(1, poisson(rng, cfg.sentences_per_post_mean));
    if (cfg.max_sentences_per_post > 0) n = std::min(n, cfg.max_sentences_per_post);
    return n;
  }

  int sample_shared(int target_size) {
    int n = cfg.min_shared_tokens + (u01(rng) < 0.5 ? 1 : 0);
    return std::min(n, target_size);
  }
};

}  // namespace

void GeneratorConfig::validate() const {
  if (n_threads == 0) throw std::invalid_argument("generator: n_threads must be positive");
  if (posts_per_thread_mean < 1.0) {
    throw std::invalid_argument("generator: posts_per_thread_mean must be >= 1");
  }
  if (sentences_per_post_mean <= 0 || tokens_per_sentence_mean <= 0) {
    throw std::invalid_argument("generator: sentence/token means must be positive");
  }
  if (root_reply_bias <= 0) throw std::invalid_argument("generator: root_reply_bias must be positive");
  if (ipi_per_reply_pair < 0 || ipi_per_reply_pair > 1) {
    throw std::invalid_argument("generator: ipi_per_reply_pair must be in [0,1]");
  }
  if (ipi_first_target_bias < 0 || ipi_first_target_bias > 1) {
    throw std::invalid_argument("generator: ipi_first_target_bias must be in [0,1]");
  }
  if (claim_ratio < 0 || premise_ratio < 0 || claim_ratio + premise_ratio > 1.0) {
    throw std::invalid_argument("generator: bad type ratios");
  }
  if (claim_ratio == 0.0) throw std::invalid_argument("generator: claim_ratio must be positive");
  if (content_vocab < 8 * static_cast<std::size_t>(topic_tokens) || filler_vocab == 0) {
    throw std::invalid_argument("generator: vocab sizes too small");
  }
  if (thread_pool_tokens > 0 && thread_pool_tokens > content_vocab) {
    throw std::invalid_argument("generator: thread pool larger than the content vocabulary");
  }
  if (topic_tokens < min_shared_tokens || min_shared_tokens < 1) {
    throw std::invalid_argument("generator: need topic_tokens >= min_shared_tokens >= 1");
  }
  if (n_authors == 0) throw std::invalid_argument("generator: n_authors must be positive");
}

namespace {

AnnotatedThread generate_thread(const GeneratorConfig& cfg, std::uint64_t seed,
                                std::size_t thread_index) {
  ThreadGen g{cfg, std::mt19937_64(splitmix64(seed ^ splitmix64(thread_index + 1))), {}};
  if (cfg.thread_pool_tokens > 0) {
    while (g.pool.size() < cfg.thread_pool_tokens) {
      std::string t = g.global_content_token();
      if (std::find(g.pool.begin(), g.pool.end(), t) == g.pool.end()) g.pool.push_back(t);
    }
  }

  AnnotatedThread at;
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "t%05zu", thread_index);
  at.thread.id = idbuf;

  const std::size_t n_posts = shifted_geometric(g.rng, cfg.posts_per_thread_mean);
  const std::int64_t base_ts = 1600000000 + static_cast<std::int64_t>(thread_index) * 86400;

  // per-sentence token plans, materialized at the end of each post
  struct SentencePlan {
    AccType type = AccType::NonArg;
    std::vector<std::string> required;  // topic + copied tokens
  };

  for (std::size_t m = 0; m < n_posts; ++m) {
    Post post;
    post.id = at.thread.id + "-p" + std::to_string(m);
    post.author = "u" + std::to_string(uniform_index(g.rng, cfg.n_authors));
    post.timestamp = base_ts + static_cast<std::int64_t>(m) * 300;
    int parent = -1;
    if (m > 0) {
      // weighted pick: the root counts root_reply_bias, replies count 1
      double total = cfg.root_reply_bias + static_cast<double>(m - 1);
      double u = u01(g.rng) * total;
      if (u < cfg.root_reply_bias) {
        parent = 0;
      } else {
        parent = 1 + static_cast<int>(std::min<double>(u - cfg.root_reply_bias,
                                                       static_cast<double>(m - 2)));
      }
      post.parent_id = at.thread.posts[parent].id;
    }

    const std::size_t n_sents = g.sentence_count();
    std::vector<SentencePlan> plan(n_sents);
    std::vector<int> claims, premises;
    for (std::size_t k = 0; k < n_sents; ++k) {
      double u = u01(g.rng);
      if (u < cfg.claim_ratio) {
        plan[k].type = AccType::Claim;
      } else if (u < cfg.claim_ratio + cfg.premise_ratio) {
        plan[k].type = AccType::Premise;
      }
    }
    for (std::size_t k = 0; k < n_sents; ++k) {
      if (plan[k].type == AccType::Claim) claims.push_back(static_cast<int>(k));
    }
    // a post with premises needs a claim for its trees to root at
    if (claims.empty()) {
      for (std::size_t k = 0; k < n_sents; ++k) {
        if (plan[k].type == AccType::Premise) {
          plan[k].type = AccType::Claim;
          claims.push_back(static_cast<int>(k));
          break;
        }
      }
    }
    for (std::size_t k = 0; k < n_sents; ++k) {
      if (plan[k].type == AccType::Premise) premises.push_back(static_cast<int>(k));
    }

    // claims of one post carry disjoint topics so in-post targets stay apart
    std::vector<std::string> used_in_post;
    for (int c : claims) {
      plan[c].required = g.distinct_content(cfg.topic_tokens, used_in_post);
      used_in_post.insert(used_in_post.end(), plan[c].required.begin(),
                          plan[c].required.end());
    }

    std::vector<AccType> types(n_sents);
    for (std::size_t k = 0; k < n_sents; ++k) types[k] = plan[k].type;
    at.gold.types.push_back(types);

    const int post_idx = static_cast<int>(m);
    for (int p : premises) {
      int target = claims[uniform_index(g.rng, claims.size())];
      at.gold.ipr.push_back({post_idx, p, target});
      const auto& topic = plan[target].required;
      int n_copy = g.sample_shared(static_cast<int>(topic.size()));
      // a distinct prefix of the target topic keeps the overlap guaranteed
      for (int i = 0; i < n_copy; ++i) plan[p].required.push_back(topic[i]);
    }

    if (parent >= 0 && !claims.empty() && u01(g.rng) < cfg.ipi_per_reply_pair) {
      const Post& parent_post = at.thread.posts[parent];
      std::vector<int> viable;
      for (std::size_t t = 0; t < parent_post.sentences.size(); ++t) {
        int content = 0;
        for (const std::string& tok : parent_post.sentences[t].tokens) {
          content += is_content_token(tok) ? 1 : 0;
        }
        if (content >= cfg.min_shared_tokens) viable.push_back(static_cast<int>(t));
      }
      if (!viable.empty()) {
        int target = u01(g.rng) < cfg.ipi_first_target_bias
                         ? viable.front()
                         : viable[uniform_index(g.rng, viable.size())];
        int callout = claims[uniform_index(g.rng, claims.size())];
        at.gold.ipi.push_back({post_idx, callout, parent, target});
        std::vector<std::string> pool;
        for (const std::string& tok : parent_post.sentences[target].tokens) {
          if (is_content_token(tok) &&
              std::find(pool.begin(), pool.end(), tok) == pool.end()) {
            pool.push_back(tok);
          }
        }
        int n_copy = g.sample_shared(static_cast<int>(pool.size()));
        for (int i = 0; i < n_copy; ++i) plan[callout].required.push_back(pool[i]);
      }
    }

    for (std::size_t k = 0; k < n_sents; ++k) {
      Sentence s;
      s.tokens = plan[k].required;
      std::size_t want = std::max<std::size_t>(
          s.tokens.size(), std::max<std::size_t>(1, poisson(g.rng, cfg.tokens_per_sentence_mean)));
      while (s.tokens.size() < want) {
        s.tokens.push_back(plan[k].type == AccType::NonArg ? g.filler_token()
                                                           : g.content_token());
      }
      for (std::size_t i = s.tokens.size(); i-- > 1;) {
        std::swap(s.tokens[i], s.tokens[uniform_index(g.rng, i + 1)]);
      }
      post.sentences.push_back(std::move(s));
    }
    at.thread.posts.push_back(std::move(post));
  }

  finalize_thread(at.thread);
  return at;
}

}  // namespace

Corpus generate_synthetic(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Corpus corpus;
  corpus.reserve(config.n_threads);
  for (std::size_t i = 0; i < config.n_threads; ++i) {
    corpus.push_back(generate_thread(config, seed, i));
  }
  return corpus;
}

}  // namespace pcpa
