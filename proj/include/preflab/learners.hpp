#pragma once

// Preference learners on a parametric policy: BT reward fitting + RLHF, DPO,
// IPO and HyPO, plus exact population losses for small instances.
//
// All training loops are plain constant-step gradient methods, single
// threaded, and deterministic given TrainConfig::seed.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "preflab/bandit.hpp"
#include "preflab/preference.hpp"

namespace preflab {

enum class RewardClass { kTabular, kLinear };
enum class PolicyParam { kTabularLogits, kSoftmaxLinear };
enum class RlhfMode { kExact, kGradient };

struct TrainConfig {
  double learning_rate = 0.05;
  int iterations = 1000;
  /// Minibatch size; a value >= the dataset size means full-batch passes in dataset order.
  int minibatch_size = 64;
  double beta = 0.1;
  /// Weight of the online reverse-KL penalty (HyPO only).
  double lambda = 0.0;
  /// Online samples per iteration (HyPO and gradient-mode RLHF).
  int online_batch = 16;
  std::optional<double> clip_bound;
  std::uint64_t seed = 0;

  // BT reward fitting (RLHF stage one).
  double reward_learning_rate = 1.0;
  int reward_iterations = 2000;

  /// Trace cadence; the first and last iterations are always recorded.
  int record_every = 1;

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  std::optional<double> loss;
  std::optional<ExtendedReal> reverse_kl;
  std::optional<ExtendedReal> forward_kl;
  std::optional<ExtendedReal> regret;
  std::optional<ExtendedReal> mean_logp_preferred;
  std::optional<ExtendedReal> logp_best;
  std::optional<ExtendedReal> mean_prob_ood;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;

  const TraceRecord& front() const { return records.front(); }
  const TraceRecord& back() const { return records.back(); }
  friend bool operator==(const TrainingTrace&, const TrainingTrace&) = default;
};

/// Quantities to record along training, beyond loss.
struct TraceSpec {
  bool track_kl = true;
  /// Enables the regret column: J(pi*) - J(pi) under this reward, pi* its Gibbs policy.
  std::optional<RewardModel> true_reward;
  /// (context, response) cells whose mean log-probability is tracked.
  std::vector<std::pair<int, int>> preferred_subset;
  std::optional<std::pair<int, int>> best;
  /// Responses outside the data support; their total mass (rho-averaged) is tracked.
  std::vector<int> ood_responses;
};

/// A differentiable map from a parameter vector to a Policy.
///
/// kTabularLogits: one logit per (x, y), index x * |Y| + y; -inf logits are
/// allowed and stay fixed (zero mass, zero gradient).
/// kSoftmaxLinear: pi(y|x) proportional to exp(w . phi(x, y)).
class PolicyModel {
 public:
  PolicyModel(BanditInstance instance, PolicyParam param);

  PolicyParam param() const { return param_; }
  const BanditInstance& instance() const { return instance_; }
  int dim() const;

  Policy policy(const Eigen::VectorXd& theta) const;
  /// Parameters reproducing `ref`; a softmax-linear model needs a softmax-linear ref.
  Eigen::VectorXd initial_params(const Policy& ref) const;

  /// grad += coef * d/dtheta log pi(y|x), where pi = policy(theta).
  void add_score(const Policy& pi, int x, int y, double coef, Eigen::VectorXd& grad) const;
  /// grad += coef * d/dtheta [log pi(a|x) - log pi(b|x)]; the normalizer cancels.
  void add_score_difference(int x, int a, int b, double coef, Eigen::VectorXd& grad) const;

 private:
  BanditInstance instance_;
  PolicyParam param_;
};

struct LossAndGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Mean over triples of log sigmoid(beta * [log pi/ref (y+) - log pi/ref (y-)]),
/// a value in (-inf, 0) to be maximized, and its gradient.
/// Throws SupportError naming the first triple outside the support of ref.
LossAndGrad dpo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                              std::span<const PreferenceTriple> batch, double beta);

/// Mean over triples of (log[pi(y+) ref(y-) / (pi(y-) ref(y+))] - 1/(2 beta))^2, to be minimized.
LossAndGrad ipo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                              std::span<const PreferenceTriple> batch, double beta);

/// One unlabeled online draw with its detached weight log(pi(y|x) / ref(y|x)).
struct OnlineSample {
  int context = 0;
  int response = 0;
  double detached_log_ratio = 0.0;
};

/// Draws `count` samples: x uniformly from the dataset's triples, y ~ pi(.|x).
std::vector<OnlineSample> draw_online_samples(const Policy& pi, const Policy& ref,
                                              std::span<const PreferenceTriple> offline, int count, Rng& rng);

/// Mean of log pi(y|x) * sg(log pi(y|x)/ref(y|x)) over samples, with the weights
/// held constant. Its gradient is an unbiased estimate of grad KL(pi || ref).
LossAndGrad kl_surrogate_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta,
                                  std::span<const OnlineSample> samples);

/// Expected DPO objective when pairs come from ref x ref (distinct responses)
/// and labels from the BT model of `true_reward`. Maximized by the Gibbs policy.
LossAndGrad population_dpo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                                         const RewardModel& true_reward, double beta);

/// Population IPO loss over index-ordered pairs (a < b) drawn from ref x ref,
/// regressing log[pi(a) ref(b) / (pi(b) ref(a))] onto I(a > b) / beta with I ~
/// Bernoulli(p*(a > b)). The minimizer satisfies a log-ratio of p* / beta.
LossAndGrad population_ipo_loss_and_grad(const PolicyModel& model, const Eigen::VectorXd& theta, const Policy& ref,
                                         const RewardModel& true_reward, double beta);

/// Empirical BT maximum likelihood by full-batch gradient ascent, starting at zero.
/// The result is identified only up to a per-context shift. Unclipped.
RewardModel fit_reward_bt(const BanditInstance& instance, const PreferenceDataset& dataset, RewardClass reward_class,
                          const TrainConfig& config);

/// Mean BT log-likelihood of a dataset under `reward`.
double bt_log_likelihood(const BanditInstance& instance, const PreferenceDataset& dataset, const RewardModel& reward);

struct TrainResult {
  Policy policy;
  TrainingTrace trace;
  Eigen::VectorXd params;
  /// Fitted (clipped) reward model; RLHF only.
  std::optional<RewardModel> reward;
};

/// Fits r_hat by BT, clips it to [-R', R'], then either returns the Gibbs policy
/// (exact) or runs score-function gradient ascent on E[r_hat] - beta KL with
/// online samples from the current policy (gradient). Gradient mode requires clip_bound.
TrainResult train_rlhf(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                       const TrainConfig& config, RlhfMode mode, RewardClass reward_class,
                       const TraceSpec& track = {});

/// Gradient ascent on the DPO objective from `ref`.
TrainResult train_dpo(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                      const TrainConfig& config, const TraceSpec& track = {});

/// Gradient descent on the IPO loss from `ref`.
TrainResult train_ipo(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                      const TrainConfig& config, const TraceSpec& track = {});

/// DPO on offline minibatches plus an online reverse-KL penalty:
/// theta += alpha * grad(l_dpo - lambda * l_kl). With lambda = 0 the iterates
/// are bit-identical to train_dpo under the same seed.
TrainResult train_hypo(const PolicyModel& model, const PreferenceDataset& dataset, const Policy& ref,
                       const TrainConfig& config, const TraceSpec& track = {});

/// Central differences, one coordinate at a time. Throws if a probe is non-finite.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& loss_fn,
                                           const Eigen::VectorXd& params, double step);

/// theta_{t+1} = theta_t +/- step * grad for a fixed number of iterations.
Eigen::VectorXd gradient_steps(const std::function<LossAndGrad(const Eigen::VectorXd&)>& fn, Eigen::VectorXd theta,
                               double step, int iterations, bool ascend);

}  // namespace preflab
