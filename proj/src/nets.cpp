#include "kcac/nets.hpp"

#include <cmath>

#include "kcac/error.hpp"

namespace kcac {

Mlp::Mlp(std::vector<int> dims, RandomStream* rng) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw ConfigError("network needs input and output dims");
  for (int d : dims_) {
    if (d < 1) throw ConfigError("network layer dims must be >= 1");
  }
  std::size_t total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    w_off_.push_back(total);
    total += std::size_t(dims_[l]) * dims_[l + 1];
    b_off_.push_back(total);
    total += dims_[l + 1];
  }
  params_.assign(total, 0.0);
  grads_.assign(total, 0.0);
  acts_.resize(dims_.size());

  if (rng) {
    // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for weights and biases.
    for (int l = 0; l < layer_count(); ++l) {
      double bound = 1.0 / std::sqrt(double(dims_[l]));
      std::size_t n = std::size_t(dims_[l]) * dims_[l + 1] + dims_[l + 1];
      for (std::size_t i = 0; i < n; ++i) {
        params_[w_off_[l] + i] = rng->uniform(-bound, bound);
      }
    }
  }
}

const Matrix& Mlp::forward(const Matrix& x) {
  if (x.cols != input_dim()) throw ShapeError("forward: input width mismatch");
  acts_[0] = x;
  for (int l = 0; l < layer_count(); ++l) {
    Matrix& out = acts_[l + 1];
    if (out.rows != x.rows || out.cols != dims_[l + 1]) {
      out.resize(x.rows, dims_[l + 1]);
    }
    kernels::linear_forward(acts_[l].data.data(), &params_[w_off_[l]],
                            &params_[b_off_[l]], out.data.data(), x.rows,
                            dims_[l], dims_[l + 1]);
    if (l + 1 < layer_count()) {
      kernels::tanh_forward(out.data.data(), out.data.data(), out.data.size());
    }
  }
  return acts_.back();
}

void Mlp::backward(const Matrix& dout, bool accumulate_param_grads,
                   Matrix* dinput) {
  int batch = acts_[0].rows;
  if (dout.rows != batch || dout.cols != output_dim()) {
    throw ShapeError("backward: gradient shape mismatch");
  }
  // delta starts as dLoss/d(pre-activation) of the linear output layer.
  delta_a_ = dout;
  Matrix* delta = &delta_a_;
  Matrix* next = &delta_b_;
  for (int l = layer_count() - 1; l >= 0; --l) {
    int in = dims_[l], out = dims_[l + 1];
    if (accumulate_param_grads) {
      std::size_t n = std::size_t(in) * out + out;
      wgrad_.resize(std::max(wgrad_.size(), n));
      kernels::linear_backward_params(acts_[l].data.data(), delta->data.data(),
                                      wgrad_.data(),
                                      wgrad_.data() + std::size_t(in) * out,
                                      batch, in, out);
      for (std::size_t i = 0; i < n; ++i) {
        grads_[w_off_[l] + i] += wgrad_[i];
      }
    }
    bool need_dinput = l > 0 || dinput != nullptr;
    if (!need_dinput) break;
    if (next->rows != batch || next->cols != in) next->resize(batch, in);
    kernels::linear_backward_input(delta->data.data(), &params_[w_off_[l]],
                                   next->data.data(), batch, in, out);
    if (l > 0) {
      // Chain through the tanh that produced acts_[l].
      kernels::tanh_backward(acts_[l].data.data(), next->data.data(),
                             next->data.data(), next->data.size());
    } else if (dinput) {
      *dinput = *next;
    }
    std::swap(delta, next);
  }
}

void Mlp::zero_grads() { grads_.assign(grads_.size(), 0.0); }

Adam::Adam(std::size_t size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0),
      v_(size, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("optimizer state does not match parameter count");
  }
  ++t_;
  double c1 = 1.0 - std::pow(beta1_, double(t_));
  double c2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void soft_update(std::vector<double>& target, const std::vector<double>& online,
                 double tau) {
  if (target.size() != online.size()) {
    throw ShapeError("soft update size mismatch");
  }
  // Convex form rather than target += tau * (online - target): the latter
  // rounds at tau = 1, this is exact at both tau = 0 and tau = 1.
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
  }
}

}  // namespace kcac
