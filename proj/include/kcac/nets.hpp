#pragma once

#include <cstddef>
#include <vector>

#include "kcac/kernels.hpp"
#include "kcac/rng.hpp"

namespace kcac {

// Fully connected net with tanh hidden layers and a linear output layer.
// Parameters and gradients live in single flat vectors (weights stored
// transposed per layer, then biases), which keeps the optimizer, soft
// updates, serialization, and finite-difference checks trivial.
class Mlp {
 public:
  // dims = {input, hidden..., output}. rng == nullptr leaves params at zero.
  Mlp(std::vector<int> dims, RandomStream* rng);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return int(dims_.size()) - 1; }
  const std::vector<int>& dims() const { return dims_; }

  // Runs the batch through the net, caching activations for backward.
  const Matrix& forward(const Matrix& x);

  // Backpropagates dLoss/dOutput for the batch of the last forward call.
  // Adds into grads() when accumulate_param_grads is set; writes
  // dLoss/dInput into *dinput when given.
  void backward(const Matrix& dout, bool accumulate_param_grads,
                Matrix* dinput = nullptr);

  void zero_grads();

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& grads() { return grads_; }

  // Flat layout per layer l: weights at weight_offset(l), size in*out
  // (transposed, [in][out]), then biases at bias_offset(l), size out.
  std::size_t weight_offset(int l) const { return w_off_[l]; }
  std::size_t bias_offset(int l) const { return b_off_[l]; }
  std::size_t param_count() const { return params_.size(); }

 private:
  std::vector<int> dims_;
  std::vector<double> params_, grads_;
  std::vector<std::size_t> w_off_, b_off_;
  std::vector<Matrix> acts_;   // acts_[0] = input copy, acts_[l+1] = layer output
  Matrix delta_a_, delta_b_;   // backward scratch
  std::vector<double> wgrad_;  // per-layer parameter-gradient scratch
};

// Adam with bias correction over one flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(std::vector<double>& params, const std::vector<double>& grads);
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// target = (1 - tau) * target + tau * online, elementwise. Exact at the
// tau = 0 (frozen) and tau = 1 (hard copy) limits.
void soft_update(std::vector<double>& target, const std::vector<double>& online,
                 double tau);

}  // namespace kcac
