#include "preflab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "preflab/errors.hpp"

namespace preflab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool params_ok(const Eigen::VectorXd& theta) {
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    // -inf marks a permanently excluded tabular logit.
    if (std::isnan(theta(i)) || theta(i) == std::numeric_limits<double>::infinity()) return false;
  }
  return true;
}

// log pi(y|x) - log ref(y|x) for a triple member, or SupportError.
double log_ratio(const Policy& pi, const Policy& ref, int x, int y, int triple_index) {
  const ExtendedReal lr = ref.log_prob(x, y);
  if (!lr.is_finite()) {
    throw SupportError("triple " + std::to_string(triple_index) + " (x=" + std::to_string(x) +
                           ", y=" + std::to_string(y) + ") lies outside the reference support",
                       triple_index);
  }
  const ExtendedReal lp = pi.log_prob(x, y);
  if (!lp.is_finite()) {
    throw SupportError("triple " + std::to_string(triple_index) + " (x=" + std::to_string(x) +
                           ", y=" + std::to_string(y) + ") has zero policy probability",
                       triple_index);
  }
  return lp.value() - lr.value();
}

void check_ref_support(const Policy& ref, std::span<const PreferenceTriple> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& t = data[i];
    for (int y : {t.preferred, t.rejected}) {
      if (!ref.log_prob(t.context, y).is_finite()) {
        throw SupportError("triple " + std::to_string(i) + " (x=" + std::to_string(t.context) +
                               ", y=" + std::to_string(y) + ") lies outside the reference support",
                           static_cast<int>(i));
      }
    }
  }
}

// Records what a TraceSpec asks for.
class Tracker {
 public:
  Tracker(const BanditInstance& instance, const Policy& ref, const TraceSpec& spec, double beta)
      : instance_(instance), ref_(ref), spec_(spec), beta_(beta) {
    if (spec_.true_reward) {
      const Policy optimal = gibbs_policy(instance_, ref_, *spec_.true_reward, beta_);
      optimal_value_ = objective_value(instance_, optimal, *spec_.true_reward, ref_, beta_);
    }
  }

  TraceRecord record(int iteration, const Policy& pi, std::optional<double> loss) const {
    TraceRecord r;
    r.iteration = iteration;
    r.loss = loss;
    if (spec_.track_kl) {
      r.reverse_kl = reverse_kl(instance_, pi, ref_);
      r.forward_kl = forward_kl(instance_, ref_, pi);
    }
    if (spec_.true_reward) {
      r.regret = *optimal_value_ - objective_value(instance_, pi, *spec_.true_reward, ref_, beta_);
    }
    if (!spec_.preferred_subset.empty()) {
      ExtendedReal acc(0.0);
      for (const auto& [x, y] : spec_.preferred_subset) acc = acc + pi.log_prob(x, y);
      r.mean_logp_preferred = (1.0 / static_cast<double>(spec_.preferred_subset.size())) * acc;
    }
    if (spec_.best) r.logp_best = pi.log_prob(spec_.best->first, spec_.best->second);
    if (!spec_.ood_responses.empty()) {
      double mass = 0.0;
      for (int x = 0; x < instance_.num_contexts(); ++x) {
        double row = 0.0;
        for (int y : spec_.ood_responses) row += pi.prob(x, y);
        mass += instance_.context_weight(x) * row;
      }
      r.mean_prob_ood = ExtendedReal(mass);
    }
    return r;
  }

 private:
  const BanditInstance& instance_;
  const Policy& ref_;
  const TraceSpec& spec_;
  double beta_;
  std::optional<ExtendedReal> optimal_value_;
};

bool should_record(int t, int total, int every) { return t == 0 || t == total || t % every == 0; }

enum class Contrastive { kDpo, kIpo };

TrainResult run_contrastive(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                            const TrainConfig& config, const TraceSpec& track, Contrastive kind, double lambda) {
  config.validate();
  if (dataset.triples.empty()) throw PreconditionError("dataset is empty");
  const std::span<const PreferenceTriple> all(dataset.triples);
  check_ref_support(ref, all);

  const auto loss_fn = [&](const Eigen::VectorXd& theta, std::span<const PreferenceTriple> batch) {
    return kind == Contrastive::kDpo ? dpo_loss_and_grad(model, theta, ref, batch, config.beta)
                                     : ipo_loss_and_grad(model, theta, ref, batch, config.beta);
  };

  const int n = dataset.size();
  const bool full_batch = config.minibatch_size >= n;
  Rng batch_rng(config.seed, Stream::kMinibatch);
  Rng online_rng(config.seed, Stream::kOnline);
  std::vector<PreferenceTriple> batch(full_batch ? 0 : static_cast<std::size_t>(config.minibatch_size));

  Tracker tracker(model.instance(), ref, track, config.beta);
  TrainingTrace trace;
  Eigen::VectorXd theta = model.initial_params(ref);

  for (int t = 0;; ++t) {
    const Policy pi = model.policy(theta);
    std::optional<LossAndGrad> full;
    if (should_record(t, config.iterations, config.record_every)) {
      full = loss_fn(theta, all);
      if (!std::isfinite(full->loss)) throw TrainingFailure("non-finite training loss", t);
      trace.records.push_back(tracker.record(t, pi, full->loss));
    }
    if (t == config.iterations) break;

    LossAndGrad step;
    if (full_batch) {
      step = full ? std::move(*full) : loss_fn(theta, all);
    } else {
      for (auto& b : batch) b = dataset.triples[batch_rng.below(static_cast<std::uint64_t>(n))];
      step = loss_fn(theta, batch);
    }
    if (!std::isfinite(step.loss)) throw TrainingFailure("non-finite training loss", t);

    Eigen::VectorXd direction = kind == Contrastive::kDpo ? std::move(step.grad) : Eigen::VectorXd(-step.grad);
    if (lambda > 0.0) {
      const auto samples = draw_online_samples(pi, ref, all, config.online_batch, online_rng);
      const LossAndGrad kl = kl_surrogate_and_grad(model, theta, samples);
      direction -= lambda * kl.grad;
    }
    theta += config.learning_rate * direction;
    if (!params_ok(theta)) throw TrainingFailure("parameters diverged", t + 1);
  }
  return TrainResult{model.policy(theta), std::move(trace), std::move(theta), std::nullopt};
}

}  // namespace

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw PreconditionError("learning rate must be positive");
  if (iterations < 0) throw PreconditionError("iterations must be nonnegative");
  if (minibatch_size < 1) throw PreconditionError("minibatch size must be at least 1");
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (!(lambda >= 0.0)) throw PreconditionError("lambda must be nonnegative");
  if (online_batch < 1) throw PreconditionError("online batch must be at least 1");
  if (clip_bound && !(*clip_bound >= 0.0)) throw PreconditionError("clip bound must be nonnegative");
  if (!(reward_learning_rate > 0.0)) throw PreconditionError("reward learning rate must be positive");
  if (reward_iterations < 0) throw PreconditionError("reward iterations must be nonnegative");
  if (record_every < 1) throw PreconditionError("record_every must be at least 1");
}

// ---------------------------------------------------------------------------
// PolicyModel

PolicyModel::PolicyModel(BanditInstance instance, PolicyParam param) : instance_(std::move(instance)), param_(param) {
  if (param_ == PolicyParam::kSoftmaxLinear && !instance_.has_features()) {
    throw InvalidInstance("softmax-linear policies need a feature map");
  }
}

int PolicyModel::dim() const {
  if (param_ == PolicyParam::kSoftmaxLinear) return instance_.feature_dim();
  return instance_.num_contexts() * instance_.num_responses();
}

Policy PolicyModel::policy(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) throw std::invalid_argument("parameter vector has the wrong dimension");
  if (param_ == PolicyParam::kSoftmaxLinear) return Policy::softmax_linear(instance_, theta);
  const int ny = instance_.num_responses();
  Eigen::MatrixXd logits(instance_.num_contexts(), ny);
  for (int x = 0; x < instance_.num_contexts(); ++x) logits.row(x) = theta.segment(x * ny, ny).transpose();
  return Policy::from_logits(logits);
}

Eigen::VectorXd PolicyModel::initial_params(const Policy& ref) const {
  if (ref.num_contexts() != instance_.num_contexts() || ref.num_responses() != instance_.num_responses()) {
    throw InvalidInstance("reference policy shape does not match the model");
  }
  if (param_ == PolicyParam::kSoftmaxLinear) {
    if (ref.kind() != PolicyKind::kSoftmaxLinear) {
      throw PreconditionError("a softmax-linear model must start from a softmax-linear reference");
    }
    return ref.weights();
  }
  const int ny = instance_.num_responses();
  Eigen::VectorXd theta(dim());
  for (int x = 0; x < instance_.num_contexts(); ++x) {
    for (int y = 0; y < ny; ++y) theta(x * ny + y) = ref.log_prob(x, y).to_double();
  }
  return theta;
}

void PolicyModel::add_score(const Policy& pi, int x, int y, double coef, Eigen::VectorXd& grad) const {
  if (param_ == PolicyParam::kSoftmaxLinear) {
    const Eigen::MatrixXd& phi = instance_.features(x);
    grad += coef * (phi.row(y) - pi.probs().row(x) * phi).transpose();
    return;
  }
  const int ny = instance_.num_responses();
  grad.segment(x * ny, ny) -= coef * pi.probs().row(x).transpose();
  grad(x * ny + y) += coef;
}

void PolicyModel::add_score_difference(int x, int a, int b, double coef, Eigen::VectorXd& grad) const {
  if (param_ == PolicyParam::kSoftmaxLinear) {
    const Eigen::MatrixXd& phi = instance_.features(x);
    grad += coef * (phi.row(a) - phi.row(b)).transpose();
    return;
  }
  const int ny = instance_.num_responses();
  grad(x * ny + a) += coef;
  grad(x * ny + b) -= coef;
}

// ---------------------------------------------------------------------------
// Losses

LossAndGrad dpo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                              std::span<const PreferenceTriple> batch, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (batch.empty()) throw PreconditionError("empty minibatch");
  const Policy pi = model.policy(theta);
  LossAndGrad out{0.0, Eigen::VectorXd::Zero(model.dim())};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    const int idx = static_cast<int>(i);
    const double margin = beta * (log_ratio(pi, ref, t.context, t.preferred, idx) -
                                  log_ratio(pi, ref, t.context, t.rejected, idx));
    out.loss += log_sigmoid(margin) * inv_n;
    // d/dm log sigmoid(m) = sigmoid(-m)
    model.add_score_difference(t.context, t.preferred, t.rejected, beta * sigmoid(-margin) * inv_n, out.grad);
  }
  return out;
}

LossAndGrad ipo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                              std::span<const PreferenceTriple> batch, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (batch.empty()) throw PreconditionError("empty minibatch");
  const Policy pi = model.policy(theta);
  LossAndGrad out{0.0, Eigen::VectorXd::Zero(model.dim())};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double target = 0.5 / beta;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    const int idx = static_cast<int>(i);
    const double h = log_ratio(pi, ref, t.context, t.preferred, idx) - log_ratio(pi, ref, t.context, t.rejected, idx);
    const double residual = h - target;
    out.loss += residual * residual * inv_n;
    model.add_score_difference(t.context, t.preferred, t.rejected, 2.0 * residual * inv_n, out.grad);
  }
  return out;
}

std::vector<OnlineSample> draw_online_samples(const Policy& pi, const Policy& ref,
                                              std::span<const PreferenceTriple> offline, int count, Rng& rng) {
  if (offline.empty()) throw PreconditionError("online contexts are drawn from the offline data, which is empty");
  std::vector<OnlineSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int x = offline.size() == 1 ? offline[0].context : offline[rng.below(offline.size())].context;
    const int y = pi.sample(x, rng);
    const ExtendedReal lr = ref.log_prob(x, y);
    if (!lr.is_finite()) {
      throw SupportError("online sample left the reference support (x=" + std::to_string(x) +
                             ", y=" + std::to_string(y) + ")",
                         -1);
    }
    out.push_back({x, y, pi.finite_log_prob(x, y) - lr.value()});
  }
  return out;
}

LossAndGrad kl_surrogate_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta,
                                  std::span<const OnlineSample> samples) {
  if (samples.empty()) throw PreconditionError("no online samples");
  const Policy pi = model.policy(theta);
  LossAndGrad out{0.0, Eigen::VectorXd::Zero(model.dim())};
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    out.loss += pi.finite_log_prob(s.context, s.response) * s.detached_log_ratio * inv_n;
    model.add_score(pi, s.context, s.response, s.detached_log_ratio * inv_n, out.grad);
  }
  return out;
}

LossAndGrad population_dpo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                                         const RewardModel& true_reward, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  const BanditInstance& inst = model.instance();
  const Policy pi = model.policy(theta);
  LossAndGrad out{0.0, Eigen::VectorXd::Zero(model.dim())};
  double norm = 0.0;
  for (int x = 0; x < inst.num_contexts(); ++x) {
    const double w = inst.context_weight(x);
    if (w == 0.0) continue;
    for (int a = 0; a < inst.num_responses(); ++a) {
      for (int b = 0; b < inst.num_responses(); ++b) {
        const double pair = ref.prob(x, a) * ref.prob(x, b);
        if (a == b || pair == 0.0) continue;
        // Ordered pair (a, b) labelled a > b with its BT probability.
        const double p = bt_probability(inst, true_reward, x, a, b);
        const double margin = beta * (log_ratio(pi, ref, x, a, -1) - log_ratio(pi, ref, x, b, -1));
        const double weight = w * pair;
        norm += weight;
        out.loss += weight * p * log_sigmoid(margin);
        model.add_score_difference(x, a, b, weight * p * beta * sigmoid(-margin), out.grad);
      }
    }
  }
  if (norm == 0.0) throw PreconditionError("reference emits no distinct pairs");
  out.loss /= norm;
  out.grad /= norm;
  return out;
}

LossAndGrad population_ipo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                                         const RewardModel& true_reward, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  const BanditInstance& inst = model.instance();
  const Policy pi = model.policy(theta);
  LossAndGrad out{0.0, Eigen::VectorXd::Zero(model.dim())};
  double norm = 0.0;
  for (int x = 0; x < inst.num_contexts(); ++x) {
    const double w = inst.context_weight(x);
    if (w == 0.0) continue;
    for (int a = 0; a < inst.num_responses(); ++a) {
      for (int b = a + 1; b < inst.num_responses(); ++b) {
        const double pair = ref.prob(x, a) * ref.prob(x, b);
        if (pair == 0.0) continue;
        const double p = bt_probability(inst, true_reward, x, a, b);
        const double h = log_ratio(pi, ref, x, a, -1) - log_ratio(pi, ref, x, b, -1);
        const double weight = w * pair;
        norm += weight;
        // E[(h - I/beta)^2] for I ~ Bernoulli(p).
        const double residual = h - p / beta;
        out.loss += weight * (residual * residual + p * (1.0 - p) / (beta * beta));
        model.add_score_difference(x, a, b, weight * 2.0 * residual, out.grad);
      }
    }
  }
  if (norm == 0.0) throw PreconditionError("reference emits no distinct pairs");
  out.loss /= norm;
  out.grad /= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Reward fitting

double bt_log_likelihood(const BanditInstance& instance, const PreferenceDataset& dataset, const RewardModel& reward) {
  if (dataset.triples.empty()) throw PreconditionError("dataset is empty");
  double acc = 0.0;
  for (const auto& t : dataset.triples) {
    acc += log_sigmoid(reward.value(instance, t.context, t.preferred) - reward.value(instance, t.context, t.rejected));
  }
  return acc / static_cast<double>(dataset.size());
}

RewardModel fit_reward_bt(const BanditInstance& instance, const PreferenceDataset& dataset, RewardClass reward_class,
                          const TrainConfig& config) {
  config.validate();
  if (dataset.triples.empty()) throw PreconditionError("dataset is empty");
  const double inv_n = 1.0 / static_cast<double>(dataset.size());
  const double lr = config.reward_learning_rate;

  if (reward_class == RewardClass::kTabular) {
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(instance.num_contexts(), instance.num_responses());
    Eigen::MatrixXd grad(table.rows(), table.cols());
    for (int it = 0; it < config.reward_iterations; ++it) {
      grad.setZero();
      double loss = 0.0;
      for (const auto& t : dataset.triples) {
        const double d = table(t.context, t.preferred) - table(t.context, t.rejected);
        loss += log_sigmoid(d);
        const double g = sigmoid(-d) * inv_n;
        grad(t.context, t.preferred) += g;
        grad(t.context, t.rejected) -= g;
      }
      if (!std::isfinite(loss)) throw TrainingFailure("BT reward fit diverged", it);
      table += lr * grad;
    }
    if (!table.allFinite()) throw TrainingFailure("BT reward fit diverged", config.reward_iterations);
    return RewardModel::tabular(std::move(table));
  }

  if (!instance.has_features()) throw InvalidInstance("linear reward fitting needs a feature map");
  const int d = instance.feature_dim();
  Eigen::MatrixXd diffs(dataset.size(), d);
  for (int i = 0; i < dataset.size(); ++i) {
    const auto& t = dataset.triples[static_cast<std::size_t>(i)];
    diffs.row(i) = instance.feature(t.context, t.preferred) - instance.feature(t.context, t.rejected);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd coef(dataset.size());
  for (int it = 0; it < config.reward_iterations; ++it) {
    const Eigen::VectorXd margins = diffs * w;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      loss += log_sigmoid(margins(i));
      coef(i) = sigmoid(-margins(i));
    }
    if (!std::isfinite(loss)) throw TrainingFailure("BT reward fit diverged", it);
    w += (lr * inv_n) * (diffs.transpose() * coef);
  }
  if (!w.allFinite()) throw TrainingFailure("BT reward fit diverged", config.reward_iterations);
  return RewardModel::linear(std::move(w));
}

// ---------------------------------------------------------------------------
// Trainers

TrainResult train_rlhf(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                       const TrainConfig& config, RlhfMode mode, RewardClass reward_class, const TraceSpec& track) {
  config.validate();
  if (mode == RlhfMode::kGradient && !config.clip_bound) {
    throw PreconditionError("gradient-mode RLHF needs a clip bound on the learned reward");
  }
  const BanditInstance& inst = model.instance();
  RewardModel reward = fit_reward_bt(inst, dataset, reward_class, config);
  if (config.clip_bound) reward = reward.clipped(*config.clip_bound);

  const auto surrogate_value = [&](const Policy& pi) -> std::optional<double> {
    const ExtendedReal j = objective_value(inst, pi, reward, ref, config.beta);
    return j.is_finite() ? std::optional<double>(j.value()) : std::nullopt;
  };

  Tracker tracker(inst, ref, track, config.beta);
  TrainingTrace trace;

  if (mode == RlhfMode::kExact) {
    Policy pi = gibbs_policy(inst, ref, reward, config.beta);
    trace.records.push_back(tracker.record(0, ref, surrogate_value(ref)));
    trace.records.push_back(tracker.record(1, pi, surrogate_value(pi)));
    Eigen::VectorXd params(inst.num_contexts() * inst.num_responses());
    for (int x = 0; x < inst.num_contexts(); ++x) {
      for (int y = 0; y < inst.num_responses(); ++y) {
        params(x * inst.num_responses() + y) = pi.log_prob(x, y).to_double();
      }
    }
    return TrainResult{std::move(pi), std::move(trace), std::move(params), std::move(reward)};
  }

  if (dataset.triples.empty()) throw PreconditionError("dataset is empty");
  const std::span<const PreferenceTriple> all(dataset.triples);
  Rng online_rng(config.seed, Stream::kOnline);
  Eigen::VectorXd theta = model.initial_params(ref);
  const double inv_b = 1.0 / static_cast<double>(config.online_batch);

  for (int t = 0;; ++t) {
    const Policy pi = model.policy(theta);
    if (should_record(t, config.iterations, config.record_every)) {
      trace.records.push_back(tracker.record(t, pi, surrogate_value(pi)));
    }
    if (t == config.iterations) break;

    // Score-function estimate of grad (E_pi[r_hat] - beta KL(pi || ref)).
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.dim());
    for (int i = 0; i < config.online_batch; ++i) {
      const int x = all.size() == 1 ? all[0].context : all[online_rng.below(all.size())].context;
      const int y = pi.sample(x, online_rng);
      const double weight =
          reward.value(inst, x, y) - config.beta * (pi.finite_log_prob(x, y) - ref.finite_log_prob(x, y));
      model.add_score(pi, x, y, weight * inv_b, grad);
    }
    theta += config.learning_rate * grad;
    if (!params_ok(theta)) throw TrainingFailure("parameters diverged", t + 1);
  }
  return TrainResult{model.policy(theta), std::move(trace), std::move(theta), std::move(reward)};
}

TrainResult train_dpo(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                      const TrainConfig& config, const TraceSpec& track) {
  return run_contrastive(model, dataset, ref, config, track, Contrastive::kDpo, 0.0);
}

TrainResult train_ipo(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                      const TrainConfig& config, const TraceSpec& track) {
  return run_contrastive(model, dataset, ref, config, track, Contrastive::kIpo, 0.0);
}

TrainResult train_hypo(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                       const TrainConfig& config, const TraceSpec& track) {
  return run_contrastive(model, dataset, ref, config, track, Contrastive::kDpo, config.lambda);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& loss_fn,
                                           const Eigen::VectorXd& params, double step) {
  if (!(step > 0.0)) throw PreconditionError("finite-difference step must be positive");
  Eigen::VectorXd grad(params.size());
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe(i) = params(i) + step;
    const double up = loss_fn(probe);
    probe(i) = params(i) - step;
    const double down = loss_fn(probe);
    probe(i) = params(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw TrainingFailure("non-finite loss at finite-difference probe", static_cast<int>(i));
    }
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

Eigen::VectorXd gradient_steps(const std::function<LossAndGrad(const Eigen::VectorXd&)>& fn, Eigen::VectorXd theta,
                               double step, int iterations, bool ascend) {
  const double sign = ascend ? 1.0 : -1.0;
  for (int t = 0; t < iterations; ++t) {
    const LossAndGrad lg = fn(theta);
    if (!std::isfinite(lg.loss)) throw TrainingFailure("non-finite loss", t);
    theta += (sign * step) * lg.grad;
  }
  return theta;
}

}  // namespace preflab
