#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pcpa/tensor.hpp"

namespace pcpa {

/// A named trainable tensor with its gradient slot. Gradients always
/// shape-match the value and accumulate across backward passes until
/// cleared by the optimizer.
struct Param {
  Tensor value;
  Tensor grad;

  explicit Param(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape())) {}
  Param() = default;
};

/// Handle into a Tape. Only valid for the tape that produced it.
struct Var {
  std::uint32_t idx = 0;
};

/// Eagerly evaluated computation graph with reverse-mode gradients.
///
/// Forward values are computed at node creation; backward() walks the
/// nodes in reverse creation order (a topological order by construction)
/// and accumulates adjoints. Leaves created with param() push their
/// adjoint into the Param's grad slot, so gradients survive tape reuse.
///
/// A tape is owned by one execution thread. Inference over a frozen
/// ParamStore can run on many tapes concurrently because frozen_param()
/// only reads the parameter tensor.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  // leaves
  Var constant(Tensor value);
  Var constant_ref(const Tensor* value);  // caller keeps the tensor alive
  Var param(Param& p);                    // tracked; backward fills p.grad
  Var frozen_param(const Param& p);       // read-only view, no gradient

  // primitive suite
  Var matmul(Var a, Var b);  // (m,n)x(n,p) -> (m,p); (m,n)x(n) -> (m)
  Var add(Var a, Var b);     // same shape
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var mul(Var a, Var b);  // pointwise, same shape
  Var concat(const std::vector<Var>& parts);  // rank-1 pieces -> rank-1
  Var softmax(Var a);      // rank-1, max-subtracted
  Var log_softmax(Var a);  // rank-1, max-subtracted
  Var sum(Var a);          // any shape -> scalar (shape {1})
  /// Inverted dropout: train mode zeroes units with probability `rate` and
  /// scales the survivors by 1/(1-rate); eval mode is the identity.
  Var dropout(Var a, double rate, std::mt19937_64& rng, bool train_mode);
  /// Sum of the selected rows of a (V,d) matrix; duplicates count once per
  /// occurrence. This is the matmul of the transposed matrix with a bag-of-
  /// words count vector, specialized to skip the zeros.
  Var rows_sum(Var matrix, const std::vector<int>& row_ids);
  /// Pointwise multiply by a scalar constant.
  Var scale(Var a, double factor);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;  // zero-sized until backward touches it

  /// Seeds the scalar loss with `seed` and accumulates adjoints into every
  /// tracked leaf (and every Param used via param()).
  void backward(Var loss, double seed = 1.0);

  void clear();  // drop all nodes, keep capacity
  std::size_t num_nodes() const;

 private:
  struct Node;
  std::vector<Node> nodes_;

  Var push(Node&& n);
  const Tensor& val(std::uint32_t idx) const;
};

/// One LSTM cell parameter block (one direction). Gate order: input,
/// forget, output, candidate.
struct LstmParams {
  Param* w_xi;
  Param* w_hi;
  Param* b_i;
  Param* w_xf;
  Param* w_hf;
  Param* b_f;
  Param* w_xo;
  Param* w_ho;
  Param* b_o;
  Param* w_xg;
  Param* w_hg;
  Param* b_g;
};

/// Same block with the leaves already placed on a tape.
struct LstmVars {
  Var w_xi, w_hi, b_i;
  Var w_xf, w_hf, b_f;
  Var w_xo, w_ho, b_o;
  Var w_xg, w_hg, b_g;
};

LstmVars place_lstm(Tape& tape, const LstmParams& p, bool with_grad);

struct LstmState {
  Var h;
  Var c;
};

/// Standard LSTM cell: sigmoid input/forget/output gates, tanh candidate.
LstmState lstm_step(Tape& tape, Var x, LstmState prev, const LstmVars& p);

/// Bidirectional encoding: output[t] = [forward_h_t ; backward_h_t], one
/// 2H vector per input. Initial states are zero.
std::vector<Var> bilstm_encode(Tape& tape, const std::vector<Var>& inputs,
                               const LstmVars& fwd, const LstmVars& bwd,
                               std::size_t hidden_dim);

}  // namespace pcpa
