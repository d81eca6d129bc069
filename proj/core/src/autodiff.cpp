#include "pcpa/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcpa {

namespace {

enum class Op : std::uint8_t {
  kConstant,
  kConstantRef,
  kParam,
  kFrozenParam,
  kMatMul,
  kAdd,
  kTanh,
  kSigmoid,
  kMul,
  kConcat,
  kSoftmax,
  kLogSoftmax,
  kSum,
  kDropout,
  kRowsSum,
  kScale,
};

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

}  // namespace

struct Tape::Node {
  Op op = Op::kConstant;
  Var a{};
  Var b{};
  Tensor val;
  const Tensor* ext_val = nullptr;  // kConstantRef / kParam / kFrozenParam
  Tensor* ext_grad = nullptr;       // kParam only
  Tensor grad;                      // sized on first use
  bool needs_grad = false;
  double factor = 0.0;        // kScale
  Tensor mask;                // kDropout
  std::vector<Var> multi;     // kConcat
  std::vector<int> row_ids;   // kRowsSum
};

Tape::Tape() { nodes_.reserve(1024); }
Tape::~Tape() = default;

Var Tape::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::val(std::uint32_t idx) const {
  const Node& n = nodes_[idx];
  return n.ext_val ? *n.ext_val : n.val;
}

const Tensor& Tape::value(Var v) const { return val(v.idx); }

const Tensor& Tape::grad(Var v) const { return nodes_[v.idx].grad; }

std::size_t Tape::num_nodes() const { return nodes_.size(); }

void Tape::clear() { nodes_.clear(); }

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.val = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor* value) {
  Node n;
  n.op = Op::kConstantRef;
  n.ext_val = value;
  return push(std::move(n));
}

Var Tape::param(Param& p) {
  Node n;
  n.op = Op::kParam;
  n.ext_val = &p.value;
  n.ext_grad = &p.grad;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::frozen_param(const Param& p) {
  Node n;
  n.op = Op::kFrozenParam;
  n.ext_val = &p.value;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = val(a.idx);
  const Tensor& tb = val(b.idx);
  if (ta.rank() != 2 || tb.rank() < 1 || tb.rank() > 2) shape_error("matmul", ta, tb);
  std::size_t m = ta.rows();
  std::size_t k = ta.cols();
  std::size_t p = tb.rank() == 2 ? tb.cols() : 1;
  if (tb.rows() != k) shape_error("matmul", ta, tb);

  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.val = tb.rank() == 2 ? Tensor({m, p}) : Tensor({m});
  const double* A = ta.data();
  const double* B = tb.data();
  double* C = n.val.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* Ai = A + i * k;
    double* Ci = C + i * p;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double aik = Ai[kk];
      if (aik == 0.0) continue;
      const double* Bk = B + kk * p;
      for (std::size_t j = 0; j < p; ++j) Ci[j] += aik * Bk[j];
    }
  }
  n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = val(a.idx);
  const Tensor& tb = val(b.idx);
  if (!ta.same_shape(tb)) shape_error("add", ta, tb);
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] + tb[i];
  n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  const Tensor& ta = val(a.idx);
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = std::tanh(ta[i]);
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  const Tensor& ta = val(a.idx);
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = 1.0 / (1.0 + std::exp(-ta[i]));
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = val(a.idx);
  const Tensor& tb = val(b.idx);
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] * tb[i];
  n.needs_grad = nodes_[a.idx].needs_grad || nodes_[b.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::size_t total = 0;
  bool needs = false;
  for (Var v : parts) {
    const Tensor& t = val(v.idx);
    if (t.rank() != 1) throw std::invalid_argument("concat: rank-1 inputs required");
    total += t.size();
    needs = needs || nodes_[v.idx].needs_grad;
  }
  Node n;
  n.op = Op::kConcat;
  n.multi = parts;
  n.val = Tensor({total});
  std::size_t off = 0;
  for (Var v : parts) {
    const Tensor& t = val(v.idx);
    std::copy(t.data(), t.data() + t.size(), n.val.data() + off);
    off += t.size();
  }
  n.needs_grad = needs;
  return push(std::move(n));
}

Var Tape::softmax(Var a) {
  const Tensor& ta = val(a.idx);
  if (ta.rank() != 1 || ta.size() == 0) {
    throw std::invalid_argument("softmax: non-empty rank-1 input required");
  }
  Node n;
  n.op = Op::kSoftmax;
  n.a = a;
  n.val = Tensor(ta.shape());
  double mx = *std::max_element(ta.data(), ta.data() + ta.size());
  double z = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    n.val[i] = std::exp(ta[i] - mx);
    z += n.val[i];
  }
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] /= z;
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::log_softmax(Var a) {
  const Tensor& ta = val(a.idx);
  if (ta.rank() != 1 || ta.size() == 0) {
    throw std::invalid_argument("log_softmax: non-empty rank-1 input required");
  }
  Node n;
  n.op = Op::kLogSoftmax;
  n.a = a;
  n.val = Tensor(ta.shape());
  double mx = *std::max_element(ta.data(), ta.data() + ta.size());
  double z = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) z += std::exp(ta[i] - mx);
  double lz = std::log(z) + mx;
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] - lz;
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const Tensor& ta = val(a.idx);
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.val = Tensor({1});
  double s = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) s += ta[i];
  n.val[0] = s;
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::dropout(Var a, double rate, std::mt19937_64& rng, bool train_mode) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!train_mode || rate == 0.0) return a;  // identity in eval mode
  const Tensor& ta = val(a.idx);
  Node n;
  n.op = Op::kDropout;
  n.a = a;
  n.val = Tensor(ta.shape());
  n.mask = Tensor(ta.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    // top 53 bits of the engine output as a uniform in [0,1)
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    n.mask[i] = u < rate ? 0.0 : keep_scale;
    n.val[i] = ta[i] * n.mask[i];
  }
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::rows_sum(Var matrix, const std::vector<int>& row_ids) {
  const Tensor& tm = val(matrix.idx);
  if (tm.rank() != 2) throw std::invalid_argument("rows_sum: rank-2 matrix required");
  if (row_ids.empty()) throw std::invalid_argument("rows_sum: no rows selected");
  std::size_t d = tm.cols();
  Node n;
  n.op = Op::kRowsSum;
  n.a = matrix;
  n.row_ids = row_ids;
  n.val = Tensor({d});
  for (int id : row_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tm.rows()) {
      throw std::invalid_argument("rows_sum: row id out of range");
    }
    const double* row = tm.data() + static_cast<std::size_t>(id) * d;
    for (std::size_t j = 0; j < d; ++j) n.val[j] += row[j];
  }
  n.needs_grad = nodes_[matrix.idx].needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  const Tensor& ta = val(a.idx);
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.factor = factor;
  n.val = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] * factor;
  n.needs_grad = nodes_[a.idx].needs_grad;
  return push(std::move(n));
}

namespace {
void ensure_grad(Tensor& g, const Tensor& like) {
  if (g.size() != like.size()) g = Tensor(like.shape());
}
}  // namespace

void Tape::backward(Var loss, double seed) {
  Node& ln = nodes_[loss.idx];
  const Tensor& lv = val(loss.idx);
  if (lv.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  ensure_grad(ln.grad, lv);
  ln.grad[0] += seed;

  for (std::uint32_t i = loss.idx + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kConstantRef:
      case Op::kFrozenParam:
        break;
      case Op::kParam: {
        Tensor& pg = *n.ext_grad;
        for (std::size_t j = 0; j < g.size(); ++j) pg[j] += g[j];
        break;
      }
      case Op::kMatMul: {
        const Tensor& ta = val(n.a.idx);
        const Tensor& tb = val(n.b.idx);
        std::size_t m = ta.rows(), k = ta.cols();
        std::size_t p = tb.rank() == 2 ? tb.cols() : 1;
        if (nodes_[n.a.idx].needs_grad) {
          Node& an = nodes_[n.a.idx];
          ensure_grad(an.grad, ta);
          // dA[i,k] += sum_j G[i,j] * B[k,j]
          for (std::size_t i2 = 0; i2 < m; ++i2) {
            const double* Gi = g.data() + i2 * p;
            double* dAi = an.grad.data() + i2 * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
              const double* Bk = tb.data() + kk * p;
              double acc = 0.0;
              for (std::size_t j = 0; j < p; ++j) acc += Gi[j] * Bk[j];
              dAi[kk] += acc;
            }
          }
        }
        if (nodes_[n.b.idx].needs_grad) {
          Node& bn = nodes_[n.b.idx];
          ensure_grad(bn.grad, tb);
          // dB[k,j] += sum_i A[i,k] * G[i,j]
          for (std::size_t i2 = 0; i2 < m; ++i2) {
            const double* Ai = ta.data() + i2 * k;
            const double* Gi = g.data() + i2 * p;
            for (std::size_t kk = 0; kk < k; ++kk) {
              double aik = Ai[kk];
              if (aik == 0.0) continue;
              double* dBk = bn.grad.data() + kk * p;
              for (std::size_t j = 0; j < p; ++j) dBk[j] += aik * Gi[j];
            }
          }
        }
        break;
      }
      case Op::kAdd: {
        for (Var in : {n.a, n.b}) {
          Node& cn = nodes_[in.idx];
          if (!cn.needs_grad) continue;
          ensure_grad(cn.grad, val(in.idx));
          for (std::size_t j = 0; j < g.size(); ++j) cn.grad[j] += g[j];
        }
        break;
      }
      case Op::kTanh: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        ensure_grad(an.grad, val(n.a.idx));
        for (std::size_t j = 0; j < g.size(); ++j) {
          an.grad[j] += g[j] * (1.0 - n.val[j] * n.val[j]);
        }
        break;
      }
      case Op::kSigmoid: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        ensure_grad(an.grad, val(n.a.idx));
        for (std::size_t j = 0; j < g.size(); ++j) {
          an.grad[j] += g[j] * n.val[j] * (1.0 - n.val[j]);
        }
        break;
      }
      case Op::kMul: {
        const Tensor& ta = val(n.a.idx);
        const Tensor& tb = val(n.b.idx);
        if (nodes_[n.a.idx].needs_grad) {
          Node& an = nodes_[n.a.idx];
          ensure_grad(an.grad, ta);
          for (std::size_t j = 0; j < g.size(); ++j) an.grad[j] += g[j] * tb[j];
        }
        if (nodes_[n.b.idx].needs_grad) {
          Node& bn = nodes_[n.b.idx];
          ensure_grad(bn.grad, tb);
          for (std::size_t j = 0; j < g.size(); ++j) bn.grad[j] += g[j] * ta[j];
        }
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (Var in : n.multi) {
          const Tensor& t = val(in.idx);
          Node& cn = nodes_[in.idx];
          if (cn.needs_grad) {
            ensure_grad(cn.grad, t);
            for (std::size_t j = 0; j < t.size(); ++j) cn.grad[j] += g[off + j];
          }
          off += t.size();
        }
        break;
      }
      case Op::kSoftmax: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        ensure_grad(an.grad, val(n.a.idx));
        double dot = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) dot += g[j] * n.val[j];
        for (std::size_t j = 0; j < g.size(); ++j) {
          an.grad[j] += n.val[j] * (g[j] - dot);
        }
        break;
      }
      case Op::kLogSoftmax: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        ensure_grad(an.grad, val(n.a.idx));
        double gsum = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) gsum += g[j];
        for (std::size_t j = 0; j < g.size(); ++j) {
          an.grad[j] += g[j] - std::exp(n.val[j]) * gsum;
        }
        break;
      }
      case Op::kSum: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        const Tensor& ta = val(n.a.idx);
        ensure_grad(an.grad, ta);
        for (std::size_t j = 0; j < ta.size(); ++j) an.grad[j] += g[0];
        break;
      }
      case Op::kDropout: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        ensure_grad(an.grad, val(n.a.idx));
        for (std::size_t j = 0; j < g.size(); ++j) an.grad[j] += g[j] * n.mask[j];
        break;
      }
      case Op::kRowsSum: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        const Tensor& tm = val(n.a.idx);
        ensure_grad(an.grad, tm);
        std::size_t d = tm.cols();
        for (int id : n.row_ids) {
          double* row = an.grad.data() + static_cast<std::size_t>(id) * d;
          for (std::size_t j = 0; j < d; ++j) row[j] += g[j];
        }
        break;
      }
      case Op::kScale: {
        Node& an = nodes_[n.a.idx];
        if (!an.needs_grad) break;
        ensure_grad(an.grad, val(n.a.idx));
        for (std::size_t j = 0; j < g.size(); ++j) an.grad[j] += g[j] * n.factor;
        break;
      }
    }
  }
}

LstmVars place_lstm(Tape& tape, const LstmParams& p, bool with_grad) {
  auto leaf = [&](Param* prm) {
    return with_grad ? tape.param(*prm) : tape.frozen_param(*prm);
  };
  LstmVars v;
  v.w_xi = leaf(p.w_xi);
  v.w_hi = leaf(p.w_hi);
  v.b_i = leaf(p.b_i);
  v.w_xf = leaf(p.w_xf);
  v.w_hf = leaf(p.w_hf);
  v.b_f = leaf(p.b_f);
  v.w_xo = leaf(p.w_xo);
  v.w_ho = leaf(p.w_ho);
  v.b_o = leaf(p.b_o);
  v.w_xg = leaf(p.w_xg);
  v.w_hg = leaf(p.w_hg);
  v.b_g = leaf(p.b_g);
  return v;
}

LstmState lstm_step(Tape& t, Var x, LstmState prev, const LstmVars& p) {
  auto gate = [&](Var wx, Var wh, Var b) {
    return t.add(t.add(t.matmul(wx, x), t.matmul(wh, prev.h)), b);
  };
  Var i = t.sigmoid(gate(p.w_xi, p.w_hi, p.b_i));
  Var f = t.sigmoid(gate(p.w_xf, p.w_hf, p.b_f));
  Var o = t.sigmoid(gate(p.w_xo, p.w_ho, p.b_o));
  Var g = t.tanh(gate(p.w_xg, p.w_hg, p.b_g));
  Var c = t.add(t.mul(f, prev.c), t.mul(i, g));
  Var h = t.mul(o, t.tanh(c));
  return {h, c};
}

std::vector<Var> bilstm_encode(Tape& t, const std::vector<Var>& inputs, const LstmVars& fwd,
                               const LstmVars& bwd, std::size_t hidden_dim) {
  if (inputs.empty()) throw std::invalid_argument("bilstm_encode: empty input");
  const std::size_t n = inputs.size();
  Var zero = t.constant(Tensor({hidden_dim}));

  std::vector<Var> fh(n);
  LstmState s{zero, zero};
  for (std::size_t i = 0; i < n; ++i) {
    s = lstm_step(t, inputs[i], s, fwd);
    fh[i] = s.h;
  }
  std::vector<Var> bh(n);
  s = {zero, zero};
  for (std::size_t i = n; i-- > 0;) {
    s = lstm_step(t, inputs[i], s, bwd);
    bh[i] = s.h;
  }
  std::vector<Var> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = t.concat({fh[i], bh[i]});
  return out;
}

}  // namespace pcpa
