#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kcac/nets.hpp"
#include "kcac/params_io.hpp"
#include "kcac/rng.hpp"

namespace kcac {

// Entropy temperature handling: Fixed holds the coefficient constant at its
// initial value; Auto learns it against a target entropy of -act_dim.
struct TargetEntropy {
  enum class Kind : std::uint8_t { Auto, Fixed };
  Kind kind = Kind::Auto;
  double value = 0.0;  // Fixed only

  static TargetEntropy auto_target() { return {Kind::Auto, 0.0}; }
  static TargetEntropy fixed(double v) { return {Kind::Fixed, v}; }
  bool operator==(const TargetEntropy&) const = default;
};

struct LearnerParams {
  double learning_rate = 1e-4;
  double tau = 1e-3;
  double entropy_coeff = 1e-3;  // initial (Auto) or constant (Fixed) temperature
  int batch_size = 256;
  long buffer_size = 1000000;
  double discount = 0.95;
  TargetEntropy target_entropy = TargetEntropy::auto_target();

  bool operator==(const LearnerParams&) const = default;
};

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
};

struct LossReport {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double temperature_loss = 0.0;
  double entropy_estimate = 0.0;
};

enum class ActionMode : std::uint8_t { Stochastic, Deterministic };

namespace detail {
struct SacScratch;  // batch workspaces reused across updates
}

// Fixed-capacity FIFO transition store with uniform without-replacement
// batch sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t logical) const;  // 0 = oldest retained

  // k distinct logical indices, uniform over the current contents.
  std::vector<std::size_t> sample_indices(RandomStream& rng, std::size_t k) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // ring write position once full
  std::vector<Transition> store_;
};

// Architecture and cadence knobs that are not part of the transferable
// hyperparameter presets.
struct SacConfig {
  std::vector<int> hidden = {64, 64};
  int warmup_transitions = 1000;  // minimum buffer fill before updates
  double log_std_min = -20.0;
  double log_std_max = 2.0;
};

// Entropy-regularized off-policy actor-critic over continuous actions in
// [-1, 1]^act_dim. Twin critics with target networks, a squashed-Gaussian
// actor, and an optionally learned entropy temperature. All gradients are
// computed in closed form by this class (no autodiff anywhere).
class SacLearner {
 public:
  SacLearner(int obs_dim, int act_dim, const LearnerParams& params,
             std::uint64_t seed, SacConfig cfg = {});
  SacLearner(SacLearner&&) noexcept;
  SacLearner& operator=(SacLearner&&) noexcept;
  ~SacLearner();

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const LearnerParams& params() const { return params_; }
  double temperature() const;

  std::vector<double> select_action(std::span<const double> obs, ActionMode mode);

  void observe_transition(const Transition& t);
  std::size_t buffer_size() const { return buffer_.size(); }

  // One gradient step on critics, actor, and temperature, plus a soft
  // target refresh. Returns nothing until the buffer holds at least
  // max(batch_size, warmup) transitions. Throws on non-finite losses.
  std::optional<LossReport> update();

  ParamBlob export_params() const;
  void import_params(const ParamBlob& blob);

 private:
  int obs_dim_, act_dim_;
  LearnerParams params_;
  SacConfig cfg_;
  RandomStream rng_;

  Mlp actor_, critic1_, critic2_, target1_, target2_;
  Adam opt_actor_, opt_critic1_, opt_critic2_;

  double log_alpha_;
  bool learn_alpha_;
  double target_entropy_value_;
  Adam opt_alpha_;

  ReplayBuffer buffer_;

  std::unique_ptr<detail::SacScratch> scratch_;
};

// Central-difference validation of the analytic gradients on a small fixed
// fixture (tiny actor and critic, one seeded batch). Returns the largest
// relative error across every parameter of both losses. corrupt, when set,
// perturbs the analytic gradient vectors before comparison; the self-test
// uses it to prove the check can fail.
double grad_check(double epsilon,
                  const std::function<void(std::vector<double>&)>& corrupt = {});

}  // namespace kcac
