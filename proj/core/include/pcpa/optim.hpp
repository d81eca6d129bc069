#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pcpa/autodiff.hpp"
#include "pcpa/tensor.hpp"

namespace pcpa {

/// Named parameter collection. Iteration order is the sorted name order,
/// which keeps optimizer updates and checkpoints deterministic.
class ParamStore {
 public:
  Param& create(const std::string& name, Tensor init);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::size_t total_size() const;
  void zero_grads();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Param> params_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. step() consumes and clears the gradients.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Throws if any gradient is non-finite, naming the parameter.
  void step(ParamStore& params);
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm. No-op when max_norm <= 0.
double clip_gradients(ParamStore& params, double max_norm);

/// Central-difference check of the gradients produced by loss_fn.
///
/// loss_fn must compute a scalar loss from the current parameter values and
/// accumulate matching gradients into the store (the usual tape + backward
/// path). Up to max_coords coordinates are sampled without replacement;
/// relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
/// Returns the maximum relative error over the sampled coordinates.
///
/// richardson = true extrapolates the h and h/2 estimates, cancelling the
/// h^2 truncation term. That permits a larger h, which lowers the rounding
/// noise that otherwise dominates coordinates with near-zero gradients on
/// large losses.
double grad_check(const std::function<double(ParamStore&)>& loss_fn, ParamStore& params,
                  double h = 1e-5, std::size_t max_coords = 200, std::uint64_t seed = 0,
                  bool richardson = false);

/// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) initialization.
Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng);

/// Uniform draw in [0,1) from the top 53 bits of the engine output.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace pcpa
