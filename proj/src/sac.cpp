#include "kcac/sac.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "kcac/error.hpp"

namespace kcac {

namespace detail {

// Everything produced by one squashed-Gaussian policy pass that the
// gradient assembly needs afterwards.
struct PolicySample {
  Matrix action;  // tanh(u), B x act
  Matrix sigma;   // exp(clamped rho)
  Matrix pass;    // 1 where rho was inside the clamp range
  std::vector<double> logp;  // per-row log density of the squashed action
};

// Batch-shaped workspaces reused across updates, so the training hot path
// settles into zero heap traffic once shapes stabilize.
struct SacScratch {
  PolicySample ps;
  Matrix obs, act, next_obs, qin, noise;
  Matrix dq, dq1, dq2, din1, din2, dout;
  std::vector<double> targets, rewards, not_done, q1v;
};

}  // namespace detail

namespace {

using detail::PolicySample;
using detail::SacScratch;

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)
constexpr double kSquashEps = 1e-6;

void ensure_shape(Matrix& m, int rows, int cols) {
  if (m.rows != rows || m.cols != cols) m.resize(rows, cols);
}

// Forward pass of the actor head: squashed-Gaussian sample with the given
// standard-normal noise, plus its log density. Leaves the actor's
// activation cache ready for a matching backward call.
void policy_forward(Mlp& actor, const Matrix& obs, const Matrix& noise,
                    const SacConfig& cfg, PolicySample& ps) {
  const Matrix& head = actor.forward(obs);
  int batch = obs.rows;
  int act = head.cols / 2;
  ensure_shape(ps.action, batch, act);
  ensure_shape(ps.sigma, batch, act);
  ensure_shape(ps.pass, batch, act);
  ps.logp.resize(std::size_t(batch));
  for (int i = 0; i < batch; ++i) {
    const double* h = head.row(i);
    double lp = 0.0;
    for (int j = 0; j < act; ++j) {
      double mu = h[j];
      double rho_raw = h[act + j];
      double rho = std::clamp(rho_raw, cfg.log_std_min, cfg.log_std_max);
      double sigma = std::exp(rho);
      double eps = noise.at(i, j);
      double t = std::tanh(mu + sigma * eps);
      ps.action.at(i, j) = t;
      ps.sigma.at(i, j) = sigma;
      ps.pass.at(i, j) = rho == rho_raw ? 1.0 : 0.0;
      lp += -0.5 * eps * eps - rho - kHalfLog2Pi -
            std::log(1.0 - t * t + kSquashEps);
    }
    ps.logp[std::size_t(i)] = lp;
  }
}

void fill_noise(RandomStream& rng, int rows, int cols, Matrix& m) {
  ensure_shape(m, rows, cols);
  for (double& v : m.data) v = rng.normal();
}

// 0.5 * mean((Q - y)^2) for one critic; fills the critic's parameter
// gradients when wanted.
double critic_loss(Mlp& critic, const Matrix& qin,
                   const std::vector<double>& y, bool with_grads, Matrix& dq) {
  const Matrix& q = critic.forward(qin);
  int batch = qin.rows;
  double loss = 0.0;
  ensure_shape(dq, batch, 1);
  for (int i = 0; i < batch; ++i) {
    double diff = q.at(i, 0) - y[i];
    loss += diff * diff;
    dq.at(i, 0) = diff / batch;
  }
  loss = 0.5 * loss / batch;
  if (with_grads) {
    critic.zero_grads();
    critic.backward(dq, true);
  }
  return loss;
}

// mean(alpha * logp - min(Q1, Q2)(s, a)) with a freshly sampled squashed
// action; fills the actor's parameter gradients when wanted. Critic
// parameters are treated as constants. Ties in the critic min go to the
// first critic. Leaves the sample's log densities in s.ps.logp.
double actor_loss(Mlp& actor, Mlp& critic1, Mlp& critic2, const Matrix& obs,
                  const Matrix& noise, double alpha, const SacConfig& cfg,
                  bool with_grads, SacScratch& s) {
  int batch = obs.rows;
  int act_dim = actor.output_dim() / 2;
  int obs_dim = obs.cols;

  PolicySample& ps = s.ps;
  policy_forward(actor, obs, noise, cfg, ps);

  ensure_shape(s.qin, batch, obs_dim + act_dim);
  for (int i = 0; i < batch; ++i) {
    double* r = s.qin.row(i);
    const double* o = obs.row(i);
    for (int k = 0; k < obs_dim; ++k) r[k] = o[k];
    for (int j = 0; j < act_dim; ++j) r[obs_dim + j] = ps.action.at(i, j);
  }
  const Matrix& q1 = critic1.forward(s.qin);
  s.q1v.resize(std::size_t(batch));
  for (int i = 0; i < batch; ++i) s.q1v[std::size_t(i)] = q1.at(i, 0);
  const Matrix& q2 = critic2.forward(s.qin);

  double loss = 0.0;
  ensure_shape(s.dq1, batch, 1);
  ensure_shape(s.dq2, batch, 1);
  for (int i = 0; i < batch; ++i) {
    double q1i = s.q1v[std::size_t(i)];
    bool first = q1i <= q2.at(i, 0);
    loss += alpha * ps.logp[std::size_t(i)] - (first ? q1i : q2.at(i, 0));
    s.dq1.at(i, 0) = first ? -1.0 / batch : 0.0;
    s.dq2.at(i, 0) = first ? 0.0 : -1.0 / batch;
  }
  loss /= batch;
  if (!with_grads) return loss;

  // dLoss/da via the selected critic's input gradient.
  critic1.backward(s.dq1, false, &s.din1);
  critic2.backward(s.dq2, false, &s.din2);

  // Chain through a = tanh(mu + sigma * eps) and the logp terms into the
  // actor head [mu | rho].
  ensure_shape(s.dout, batch, 2 * act_dim);
  for (int i = 0; i < batch; ++i) {
    for (int j = 0; j < act_dim; ++j) {
      double t = ps.action.at(i, j);
      double one_m_t2 = 1.0 - t * t;
      double denom = one_m_t2 + kSquashEps;
      double da = s.din1.at(i, obs_dim + j) + s.din2.at(i, obs_dim + j);
      double dlogp_du = 2.0 * t * one_m_t2 / denom;
      double du = (alpha / batch) * dlogp_du + da * one_m_t2;
      s.dout.at(i, j) = du;
      double drho = du * ps.sigma.at(i, j) * noise.at(i, j) - alpha / batch;
      s.dout.at(i, act_dim + j) = ps.pass.at(i, j) * drho;
    }
  }
  actor.zero_grads();
  actor.backward(s.dout, true);
  return loss;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
  store_.reserve(std::min<std::size_t>(capacity, 1 << 20));
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(t));
  } else {
    store_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t logical) const {
  if (logical >= store_.size()) throw Error("replay buffer index out of range");
  if (store_.size() < capacity_) return store_[logical];
  return store_[(next_ + logical) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(RandomStream& rng,
                                                      std::size_t k) const {
  std::size_t n = store_.size();
  if (k > n) throw Error("cannot sample more transitions than stored");
  // Floyd's algorithm: k distinct uniform draws, order fixed by insertion.
  std::vector<std::size_t> out;
  out.reserve(k);
  std::unordered_set<std::size_t> taken;
  taken.reserve(k * 2);
  for (std::size_t i = n - k; i < n; ++i) {
    std::size_t j = rng.uniform_index(i + 1);
    if (!taken.insert(j).second) {
      taken.insert(i);
      j = i;
    }
    out.push_back(j);
  }
  return out;
}

namespace {

std::vector<int> actor_dims(int obs, int act, const SacConfig& cfg) {
  std::vector<int> d{obs};
  d.insert(d.end(), cfg.hidden.begin(), cfg.hidden.end());
  d.push_back(2 * act);  // mean and log-std per action coordinate
  return d;
}

std::vector<int> critic_dims(int obs, int act, const SacConfig& cfg) {
  std::vector<int> d{obs + act};
  d.insert(d.end(), cfg.hidden.begin(), cfg.hidden.end());
  d.push_back(1);
  return d;
}

void validate_learner_params(const LearnerParams& p) {
  if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate)) {
    throw ConfigError("learner.learning_rate must be positive");
  }
  if (!(p.tau >= 0.0) || p.tau > 1.0) {
    // Both limits are meaningful: 0 freezes the targets, 1 hard-copies.
    throw ConfigError("learner.tau must be in [0, 1]");
  }
  if (!(p.entropy_coeff > 0.0)) {
    throw ConfigError("learner.entropy_coeff must be positive");
  }
  if (p.batch_size < 1) throw ConfigError("learner.batch_size must be >= 1");
  if (p.buffer_size < p.batch_size) {
    throw ConfigError("learner.buffer_size must be >= batch_size");
  }
  if (!(p.discount >= 0.0) || p.discount >= 1.0) {
    throw ConfigError("learner.discount must be in [0, 1)");
  }
}

}  // namespace

SacLearner::SacLearner(int obs_dim, int act_dim, const LearnerParams& params,
                       std::uint64_t seed, SacConfig cfg)
    : obs_dim_((validate_learner_params(params), obs_dim)),
      act_dim_(act_dim),
      params_(params),
      cfg_(std::move(cfg)),
      rng_(seed),
      actor_(actor_dims(obs_dim, act_dim, cfg_), &rng_),
      critic1_(critic_dims(obs_dim, act_dim, cfg_), &rng_),
      critic2_(critic_dims(obs_dim, act_dim, cfg_), &rng_),
      target1_(critic1_),
      target2_(critic2_),
      opt_actor_(actor_.param_count(), params.learning_rate),
      opt_critic1_(critic1_.param_count(), params.learning_rate),
      opt_critic2_(critic2_.param_count(), params.learning_rate),
      log_alpha_(std::log(params.entropy_coeff)),
      learn_alpha_(params.target_entropy.kind == TargetEntropy::Kind::Auto),
      target_entropy_value_(learn_alpha_ ? -double(act_dim)
                                         : params.target_entropy.value),
      opt_alpha_(1, params.learning_rate),
      buffer_(std::size_t(params.buffer_size)),
      scratch_(std::make_unique<detail::SacScratch>()) {
  if (obs_dim < 1 || act_dim < 1) {
    throw ConfigError("learner needs positive observation and action dims");
  }
}

SacLearner::SacLearner(SacLearner&&) noexcept = default;
SacLearner& SacLearner::operator=(SacLearner&&) noexcept = default;
SacLearner::~SacLearner() = default;

double SacLearner::temperature() const { return std::exp(log_alpha_); }

std::vector<double> SacLearner::select_action(std::span<const double> obs,
                                              ActionMode mode) {
  if (int(obs.size()) != obs_dim_) {
    throw ShapeError("select_action: observation size mismatch");
  }
  for (double v : obs) {
    if (!std::isfinite(v)) throw Error("select_action: observation not finite");
  }
  Matrix in(1, obs_dim_);
  for (int k = 0; k < obs_dim_; ++k) in.at(0, k) = obs[k];
  Matrix noise(1, act_dim_);
  if (mode == ActionMode::Stochastic) {
    for (double& v : noise.data) v = rng_.normal();
  }
  const Matrix& head = actor_.forward(in);
  std::vector<double> a(act_dim_);
  for (int j = 0; j < act_dim_; ++j) {
    double mu = head.at(0, j);
    if (mode == ActionMode::Deterministic) {
      a[j] = std::tanh(mu);
    } else {
      double rho = std::clamp(head.at(0, act_dim_ + j), cfg_.log_std_min,
                              cfg_.log_std_max);
      a[j] = std::tanh(mu + std::exp(rho) * noise.at(0, j));
    }
  }
  return a;
}

void SacLearner::observe_transition(const Transition& t) {
  if (int(t.obs.size()) != obs_dim_ || int(t.next_obs.size()) != obs_dim_ ||
      int(t.action.size()) != act_dim_) {
    throw ShapeError("transition does not match learner dimensions");
  }
  buffer_.push(t);
}

std::optional<LossReport> SacLearner::update() {
  std::size_t need = std::max<std::size_t>(std::size_t(params_.batch_size),
                                           std::size_t(cfg_.warmup_transitions));
  if (buffer_.size() < need) return std::nullopt;

  const int B = params_.batch_size;
  const double alpha = std::exp(log_alpha_);
  SacScratch& s = *scratch_;

  std::vector<std::size_t> idx = buffer_.sample_indices(rng_, std::size_t(B));
  ensure_shape(s.obs, B, obs_dim_);
  ensure_shape(s.next_obs, B, obs_dim_);
  ensure_shape(s.act, B, act_dim_);
  ensure_shape(s.qin, B, obs_dim_ + act_dim_);
  s.rewards.resize(std::size_t(B));
  s.not_done.resize(std::size_t(B));
  for (int i = 0; i < B; ++i) {
    const Transition& t = buffer_.at(idx[std::size_t(i)]);
    std::copy(t.obs.begin(), t.obs.end(), s.obs.row(i));
    std::copy(t.next_obs.begin(), t.next_obs.end(), s.next_obs.row(i));
    std::copy(t.action.begin(), t.action.end(), s.act.row(i));
    s.rewards[std::size_t(i)] = t.reward;
    s.not_done[std::size_t(i)] = t.terminal ? 0.0 : 1.0;
  }

  // Bootstrapped targets from the frozen critics and a fresh next action.
  fill_noise(rng_, B, act_dim_, s.noise);
  policy_forward(actor_, s.next_obs, s.noise, cfg_, s.ps);
  for (int i = 0; i < B; ++i) {
    double* r = s.qin.row(i);
    const double* o = s.next_obs.row(i);
    for (int k = 0; k < obs_dim_; ++k) r[k] = o[k];
    for (int j = 0; j < act_dim_; ++j) r[obs_dim_ + j] = s.ps.action.at(i, j);
  }
  const Matrix& q1t = target1_.forward(s.qin);
  s.q1v.resize(std::size_t(B));
  for (int i = 0; i < B; ++i) s.q1v[std::size_t(i)] = q1t.at(i, 0);
  const Matrix& q2t = target2_.forward(s.qin);
  s.targets.resize(std::size_t(B));
  for (int i = 0; i < B; ++i) {
    double qmin = std::min(s.q1v[std::size_t(i)], q2t.at(i, 0));
    s.targets[std::size_t(i)] =
        s.rewards[std::size_t(i)] +
        params_.discount * s.not_done[std::size_t(i)] *
            (qmin - alpha * s.ps.logp[std::size_t(i)]);
  }

  for (int i = 0; i < B; ++i) {
    double* r = s.qin.row(i);
    const double* o = s.obs.row(i);
    for (int k = 0; k < obs_dim_; ++k) r[k] = o[k];
    for (int j = 0; j < act_dim_; ++j) r[obs_dim_ + j] = s.act.at(i, j);
  }
  double c1 = critic_loss(critic1_, s.qin, s.targets, true, s.dq);
  opt_critic1_.step(critic1_.params(), critic1_.grads());
  double c2 = critic_loss(critic2_, s.qin, s.targets, true, s.dq);
  opt_critic2_.step(critic2_.params(), critic2_.grads());
  double critic_total = c1 + c2;  // each is 0.5 * per-critic mse

  // Actor step against the just-updated critics.
  fill_noise(rng_, B, act_dim_, s.noise);
  double a_loss =
      actor_loss(actor_, critic1_, critic2_, s.obs, s.noise, alpha, cfg_, true, s);
  opt_actor_.step(actor_.params(), actor_.grads());

  double temp_loss = 0.0;
  double mean_logp = 0.0;
  for (double v : s.ps.logp) mean_logp += v;
  mean_logp /= B;
  if (learn_alpha_) {
    // L(log_alpha) = -log_alpha * mean(logp + target_entropy).
    double excess = mean_logp + target_entropy_value_;
    temp_loss = -log_alpha_ * excess;
    std::vector<double> la{log_alpha_}, g{-excess};
    opt_alpha_.step(la, g);
    log_alpha_ = la[0];
  }

  soft_update(target1_.params(), critic1_.params(), params_.tau);
  soft_update(target2_.params(), critic2_.params(), params_.tau);

  LossReport report{critic_total, a_loss, temp_loss, -mean_logp};
  if (!std::isfinite(report.critic_loss) || !std::isfinite(report.actor_loss) ||
      !std::isfinite(report.temperature_loss) ||
      !std::isfinite(report.entropy_estimate)) {
    throw Error("learner diverged: non-finite loss");
  }
  return report;
}

ParamBlob SacLearner::export_params() const {
  ParamBlob blob;
  blob.obs_dim = obs_dim_;
  blob.act_dim = act_dim_;
  blob.log_temperature = log_alpha_;
  const std::pair<const char*, const Mlp*> nets[] = {
      {"actor", &actor_},     {"critic1", &critic1_}, {"critic2", &critic2_},
      {"target1", &target1_}, {"target2", &target2_},
  };
  for (auto [name, net] : nets) {
    for (int l = 0; l < net->layer_count(); ++l) {
      int in = net->dims()[l], out = net->dims()[l + 1];
      NamedTensor w;
      w.name = std::string(name) + ".l" + std::to_string(l) + ".w";
      w.shape = {in, out};
      auto wb = net->params().begin() + long(net->weight_offset(l));
      w.values.assign(wb, wb + std::size_t(in) * out);
      blob.tensors.push_back(std::move(w));
      NamedTensor b;
      b.name = std::string(name) + ".l" + std::to_string(l) + ".b";
      b.shape = {out};
      auto bb = net->params().begin() + long(net->bias_offset(l));
      b.values.assign(bb, bb + out);
      blob.tensors.push_back(std::move(b));
    }
  }
  return blob;
}

void SacLearner::import_params(const ParamBlob& blob) {
  if (blob.obs_dim != obs_dim_ || blob.act_dim != act_dim_) {
    throw ShapeError("parameter blob is for a different interface: blob " +
                     std::to_string(blob.obs_dim) + "x" +
                     std::to_string(blob.act_dim) + ", learner " +
                     std::to_string(obs_dim_) + "x" + std::to_string(act_dim_));
  }
  ParamBlob expected = export_params();
  if (blob.tensors.size() != expected.tensors.size()) {
    throw ShapeError("parameter blob tensor count mismatch");
  }
  const std::pair<const char*, Mlp*> nets[] = {
      {"actor", &actor_},     {"critic1", &critic1_}, {"critic2", &critic2_},
      {"target1", &target1_}, {"target2", &target2_},
  };
  std::size_t ti = 0;
  for (auto [name, net] : nets) {
    for (int l = 0; l < net->layer_count(); ++l, ti += 2) {
      const NamedTensor& w = blob.tensors[ti];
      const NamedTensor& b = blob.tensors[ti + 1];
      const NamedTensor& we = expected.tensors[ti];
      const NamedTensor& be = expected.tensors[ti + 1];
      if (w.name != we.name || w.shape != we.shape || b.name != be.name ||
          b.shape != be.shape) {
        throw ShapeError("parameter blob tensor '" + w.name +
                         "' does not match learner architecture");
      }
      std::copy(w.values.begin(), w.values.end(),
                net->params().begin() + long(net->weight_offset(l)));
      std::copy(b.values.begin(), b.values.end(),
                net->params().begin() + long(net->bias_offset(l)));
    }
  }
  log_alpha_ = blob.log_temperature;
}

double grad_check(double epsilon,
                  const std::function<void(std::vector<double>&)>& corrupt) {
  if (!(epsilon >= 1e-8 && epsilon <= 1e-3)) {
    throw ConfigError("grad_check epsilon must be in [1e-8, 1e-3]");
  }
  const int batch = 8, obs_dim = 2, act_dim = 1;
  SacConfig cfg;
  cfg.hidden = {4, 4};

  RandomStream rng(20240817);
  Mlp actor(actor_dims(obs_dim, act_dim, cfg), &rng);
  Mlp critic1(critic_dims(obs_dim, act_dim, cfg), &rng);
  Mlp critic2(critic_dims(obs_dim, act_dim, cfg), &rng);

  Matrix obs(batch, obs_dim), act(batch, act_dim), noise(batch, act_dim);
  std::vector<double> y(batch);
  for (double& v : obs.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : act.data) v = rng.uniform(-0.9, 0.9);
  for (double& v : noise.data) v = rng.normal();
  for (double& v : y) v = rng.uniform(-1.0, 1.0);
  const double alpha = 0.2;

  Matrix qin(batch, obs_dim + act_dim);
  for (int i = 0; i < batch; ++i) {
    for (int k = 0; k < obs_dim; ++k) qin.at(i, k) = obs.at(i, k);
    for (int j = 0; j < act_dim; ++j) qin.at(i, obs_dim + j) = act.at(i, j);
  }

  SacScratch scratch;
  double max_rel = 0.0;
  auto rel_error = [](double ga, double gn) {
    double err = std::abs(ga - gn);
    double denom = std::max(std::abs(ga), std::abs(gn));
    if (denom < 1e-12 && err < 1e-12) return 0.0;
    return err / std::max(denom, 1e-6);
  };

  // Critic gradients against central differences.
  for (Mlp* critic : {&critic1, &critic2}) {
    critic_loss(*critic, qin, y, true, scratch.dq);
    std::vector<double> analytic = critic->grads();
    if (corrupt) corrupt(analytic);
    for (std::size_t p = 0; p < critic->param_count(); ++p) {
      double saved = critic->params()[p];
      critic->params()[p] = saved + epsilon;
      double hi = critic_loss(*critic, qin, y, false, scratch.dq);
      critic->params()[p] = saved - epsilon;
      double lo = critic_loss(*critic, qin, y, false, scratch.dq);
      critic->params()[p] = saved;
      max_rel = std::max(max_rel, rel_error(analytic[p], (hi - lo) / (2 * epsilon)));
    }
  }

  // Actor gradients (critics fixed) against central differences.
  actor_loss(actor, critic1, critic2, obs, noise, alpha, cfg, true, scratch);
  std::vector<double> analytic = actor.grads();
  if (corrupt) corrupt(analytic);
  for (std::size_t p = 0; p < actor.param_count(); ++p) {
    double saved = actor.params()[p];
    actor.params()[p] = saved + epsilon;
    double hi = actor_loss(actor, critic1, critic2, obs, noise, alpha, cfg,
                           false, scratch);
    actor.params()[p] = saved - epsilon;
    double lo = actor_loss(actor, critic1, critic2, obs, noise, alpha, cfg,
                           false, scratch);
    actor.params()[p] = saved;
    max_rel = std::max(max_rel, rel_error(analytic[p], (hi - lo) / (2 * epsilon)));
  }
  return max_rel;
}

}  // namespace kcac
