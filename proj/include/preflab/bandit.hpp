#pragma once

// Contextual bandit domain: instances, policies, rewards, and exact evaluation
// of the KL-regularized objective
//
//   J(pi) = E_{x~rho} [ E_{y~pi(.|x)} r(x,y) - beta * KL(pi(.|x) || pi_ref(.|x)) ].
//
// Contexts and responses are dense indices 0..|X|-1 and 0..|Y|-1.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "preflab/extended_real.hpp"
#include "preflab/rng.hpp"

namespace preflab {

/// Mass at or below this is treated as zero when testing support.
inline constexpr double kSupportTol = 1e-12;
inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kContextWeightTol = 1e-12;

class BanditInstance {
 public:
  /// Tabular instance without features.
  BanditInstance(Eigen::VectorXd context_weights, int num_responses);
  /// Instance with a feature map; features[x] is |Y| x d with row y = phi(x, y).
  BanditInstance(Eigen::VectorXd context_weights, std::vector<Eigen::MatrixXd> features);

  static BanditInstance promptless(int num_responses);
  static BanditInstance promptless(Eigen::MatrixXd features);

  int num_contexts() const { return static_cast<int>(context_weights_.size()); }
  int num_responses() const { return num_responses_; }
  const Eigen::VectorXd& context_weights() const { return context_weights_; }
  double context_weight(int x) const { return context_weights_(x); }

  bool has_features() const { return !features_.empty(); }
  int feature_dim() const;
  /// |Y| x d feature block of context x.
  const Eigen::MatrixXd& features(int x) const;
  auto feature(int x, int y) const { return features(x).row(y); }

  void check_context(int x) const;
  void check_response(int y) const;
  bool has_uniform_context_weights() const;

 private:
  Eigen::VectorXd context_weights_;
  int num_responses_;
  std::vector<Eigen::MatrixXd> features_;
};

enum class PolicyKind { kTabular, kSoftmaxLinear };

/// Conditional distribution over responses, one row per context.
/// Immutable; probabilities and log-probabilities are materialized on construction.
class Policy {
 public:
  /// Rows must be nonnegative and sum to one within kRowSumTol.
  static Policy tabular(Eigen::MatrixXd probs);
  /// Row-wise softmax of logits; -inf logits give exact zeros.
  static Policy from_logits(const Eigen::MatrixXd& logits);
  static Policy uniform(const BanditInstance& instance);
  /// pi(y|x) proportional to exp(w . phi(x, y)).
  static Policy softmax_linear(const BanditInstance& instance, Eigen::VectorXd weights);

  PolicyKind kind() const { return kind_; }
  int num_contexts() const { return static_cast<int>(probs_.rows()); }
  int num_responses() const { return static_cast<int>(probs_.cols()); }

  double prob(int x, int y) const;
  ExtendedReal log_prob(int x, int y) const;
  /// Finite log-probability; throws SupportError when pi(y|x) = 0.
  double finite_log_prob(int x, int y) const;
  const Eigen::MatrixXd& probs() const { return probs_; }
  /// Weights of a softmax-linear policy; throws std::logic_error for tabular.
  const Eigen::VectorXd& weights() const;

  int sample(int x, Rng& rng) const;

 private:
  Policy(PolicyKind kind, Eigen::MatrixXd probs, Eigen::MatrixXd log_probs);
  void check_context(int x) const;

  PolicyKind kind_;
  Eigen::MatrixXd probs_;
  Eigen::MatrixXd log_probs_;  // -inf where probs_ is zero
  Eigen::VectorXd weights_;
};

enum class RewardKind { kTabular, kLinear };

/// Real-valued reward on (context, response), optionally clamped to [-R', R'].
class RewardModel {
 public:
  static RewardModel tabular(Eigen::MatrixXd table, std::optional<double> clip_bound = {});
  static RewardModel linear(Eigen::VectorXd weights, std::optional<double> clip_bound = {});

  RewardKind kind() const { return kind_; }
  std::optional<double> clip_bound() const { return clip_bound_; }
  /// Same model with evaluation clamped to [-bound, bound].
  RewardModel clipped(double bound) const;

  double value(const BanditInstance& instance, int x, int y) const;
  /// |X| x |Y| table of (clipped) values.
  Eigen::MatrixXd evaluate(const BanditInstance& instance) const;

  const Eigen::MatrixXd& table() const { return table_; }
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  RewardModel() = default;
  double clamp(double v) const;

  RewardKind kind_ = RewardKind::kTabular;
  Eigen::MatrixXd table_;
  Eigen::VectorXd weights_;
  std::optional<double> clip_bound_;
};

/// Maximizer of the KL-regularized objective: pi(y|x) = pi_ref(y|x) exp(r(x,y)/beta) / Z(x).
/// Responses outside the support of ref stay at exactly zero.
Policy gibbs_policy(const BanditInstance& instance, const Policy& ref, const RewardModel& reward,
                    double beta);

/// J(pi); -inf when pi puts mass on a response outside the support of ref.
ExtendedReal objective_value(const BanditInstance& instance, const Policy& policy,
                             const RewardModel& reward, const Policy& ref, double beta);

/// E_{x~rho} KL(p(.|x) || q(.|x)), +inf on support violation.
ExtendedReal reverse_kl(const BanditInstance& instance, const Policy& p, const Policy& q);
/// E_{x~rho} KL(ref(.|x) || pi(.|x)).
ExtendedReal forward_kl(const BanditInstance& instance, const Policy& ref, const Policy& policy);

/// KL between two probability vectors, +inf on support violation.
ExtendedReal kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p,
                           const Eigen::Ref<const Eigen::VectorXd>& q);

/// E_{x~rho} of half the l1 distance between rows.
double total_variation(const BanditInstance& instance, const Policy& p, const Policy& q);

/// log sum_i exp(v_i) with max subtraction; -inf for an all -inf input.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace preflab
