#include "pcpa/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcpa {

Param& ParamStore::create(const std::string& name, Tensor init) {
  auto [it, inserted] = params_.emplace(name, Param(std::move(init)));
  if (!inserted) throw std::invalid_argument("param already exists: " + name);
  return it->second;
}

Param& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no such param: " + name);
  return it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no such param: " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

void AdamState::step(ParamStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    if (!p.grad.all_finite()) {
      throw std::runtime_error("adam: non-finite gradient for parameter " + name);
    }
    Moments& mo = moments_[name];
    if (mo.m.size() != p.value.size()) {
      mo.m = Tensor(p.value.shape());
      mo.v = Tensor(p.value.shape());
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double g = p.grad[i];
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
      double m_hat = mo.m[i] / bc1;
      double v_hat = mo.v[i] / bc2;
      p.value[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    p.grad.fill(0.0);
  }
}

double clip_gradients(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params) {
    for (std::size_t i = 0; i < p.grad.size(); ++i) sq += p.grad[i] * p.grad[i];
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (auto& [name, p] : params) {
      for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] *= s;
    }
  }
  return norm;
}

double grad_check(const std::function<double(ParamStore&)>& loss_fn, ParamStore& params,
                  double h, std::size_t max_coords, std::uint64_t seed, bool richardson) {
  params.zero_grads();
  double base = loss_fn(params);
  if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");

  // freeze the analytic gradients before probing
  std::map<std::string, Tensor> analytic;
  for (auto& [name, p] : params) analytic.emplace(name, p.grad);

  std::vector<std::pair<std::string, std::size_t>> coords;
  for (auto& [name, p] : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) coords.emplace_back(name, i);
  }
  if (coords.size() > max_coords) {
    std::mt19937_64 rng(seed ^ 0x5bf03635d1d4f1a7ull);
    for (std::size_t i = 0; i < max_coords; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng() % (coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(max_coords);
  }

  double max_rel = 0.0;
  for (const auto& [name, i] : coords) {
    Param& p = params.get(name);
    double saved = p.value[i];
    auto probe = [&](double delta) {
      p.value[i] = saved + delta;
      double f = loss_fn(params);
      p.value[i] = saved;
      if (!std::isfinite(f)) {
        throw std::runtime_error("grad_check: non-finite loss while probing " + name);
      }
      return f;
    };
    double numeric = (probe(h) - probe(-h)) / (2.0 * h);
    if (richardson) {
      double half = (probe(h / 2) - probe(-h / 2)) / h;
      numeric = (4.0 * half - numeric) / 3.0;
    }
    double a = analytic.at(name)[i];
    double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  // probing calls polluted the gradient slots; leave them clean
  params.zero_grads();
  return max_rel;
}

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  double bound = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  return t;
}

}  // namespace pcpa
