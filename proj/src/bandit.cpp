#include "preflab/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "preflab/errors.hpp"

namespace preflab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate_context_weights(const Eigen::VectorXd& w) {
  if (w.size() == 0) throw InvalidInstance("instance needs at least one context");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w(i) >= 0.0) || !std::isfinite(w(i))) {
      throw InvalidInstance("context weight " + std::to_string(i) + " is negative or non-finite");
    }
  }
  if (std::abs(w.sum() - 1.0) > kContextWeightTol) {
    std::ostringstream os;
    os << "context weights sum to " << w.sum() << ", expected 1";
    throw InvalidInstance(os.str());
  }
}

// Row-wise log-softmax; -inf entries stay -inf.
Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index x = 0; x < logits.rows(); ++x) {
    const double lse = log_sum_exp(logits.row(x).transpose());
    if (!std::isfinite(lse)) {
      throw InvalidInstance("logit row " + std::to_string(x) + " has no finite entry");
    }
    for (Eigen::Index y = 0; y < logits.cols(); ++y) {
      out(x, y) = logits(x, y) == kNegInf ? kNegInf : logits(x, y) - lse;
    }
  }
  return out;
}

Eigen::MatrixXd exp_or_zero(const Eigen::MatrixXd& log_probs) {
  Eigen::MatrixXd p(log_probs.rows(), log_probs.cols());
  for (Eigen::Index i = 0; i < log_probs.size(); ++i) {
    p(i) = log_probs(i) == kNegInf ? 0.0 : std::exp(log_probs(i));
  }
  return p;
}

// KL of one row pair, or +inf.
ExtendedReal row_kl(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  double acc = 0.0;
  for (Eigen::Index y = 0; y < p.size(); ++y) {
    if (p(y) <= kSupportTol) continue;
    if (q(y) <= 0.0) return ExtendedReal::pos_inf();
    acc += p(y) * (std::log(p(y)) - std::log(q(y)));
  }
  // Rounding can push an exact zero slightly negative.
  return ExtendedReal(std::max(acc, 0.0));
}

}  // namespace

// ---------------------------------------------------------------------------
// BanditInstance

BanditInstance::BanditInstance(Eigen::VectorXd context_weights, int num_responses)
    : context_weights_(std::move(context_weights)), num_responses_(num_responses) {
  validate_context_weights(context_weights_);
  if (num_responses_ < 1) throw InvalidInstance("instance needs at least one response");
}

BanditInstance::BanditInstance(Eigen::VectorXd context_weights, std::vector<Eigen::MatrixXd> features)
    : context_weights_(std::move(context_weights)), features_(std::move(features)) {
  validate_context_weights(context_weights_);
  if (static_cast<Eigen::Index>(features_.size()) != context_weights_.size()) {
    throw InvalidInstance("feature map must have one block per context");
  }
  num_responses_ = static_cast<int>(features_.front().rows());
  const auto d = features_.front().cols();
  if (num_responses_ < 1 || d < 1) throw InvalidInstance("feature blocks must be non-empty");
  for (const auto& block : features_) {
    if (block.rows() != num_responses_ || block.cols() != d) {
      throw InvalidInstance("feature blocks must all be |Y| x d");
    }
    if (!block.allFinite()) throw InvalidInstance("features must be finite");
  }
}

BanditInstance BanditInstance::promptless(int num_responses) {
  return BanditInstance(Eigen::VectorXd::Ones(1), num_responses);
}

BanditInstance BanditInstance::promptless(Eigen::MatrixXd features) {
  return BanditInstance(Eigen::VectorXd::Ones(1), std::vector<Eigen::MatrixXd>{std::move(features)});
}

int BanditInstance::feature_dim() const {
  if (!has_features()) throw std::logic_error("instance has no feature map");
  return static_cast<int>(features_.front().cols());
}

const Eigen::MatrixXd& BanditInstance::features(int x) const {
  if (!has_features()) throw std::logic_error("instance has no feature map");
  check_context(x);
  return features_[static_cast<std::size_t>(x)];
}

void BanditInstance::check_context(int x) const {
  if (x < 0 || x >= num_contexts()) throw std::out_of_range("unknown context index " + std::to_string(x));
}

void BanditInstance::check_response(int y) const {
  if (y < 0 || y >= num_responses_) throw std::out_of_range("unknown response index " + std::to_string(y));
}

bool BanditInstance::has_uniform_context_weights() const {
  const double u = 1.0 / static_cast<double>(num_contexts());
  return (context_weights_.array() - u).abs().maxCoeff() <= kContextWeightTol;
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(PolicyKind kind, Eigen::MatrixXd probs, Eigen::MatrixXd log_probs)
    : kind_(kind), probs_(std::move(probs)), log_probs_(std::move(log_probs)) {}

Policy Policy::tabular(Eigen::MatrixXd probs) {
  if (probs.rows() < 1 || probs.cols() < 1) throw InvalidInstance("policy table is empty");
  for (Eigen::Index x = 0; x < probs.rows(); ++x) {
    for (Eigen::Index y = 0; y < probs.cols(); ++y) {
      if (!(probs(x, y) >= 0.0) || !std::isfinite(probs(x, y))) {
        throw InvalidInstance("policy entry (" + std::to_string(x) + "," + std::to_string(y) +
                              ") is negative or non-finite");
      }
    }
    if (std::abs(probs.row(x).sum() - 1.0) > kRowSumTol) {
      throw InvalidInstance("policy row " + std::to_string(x) + " does not sum to 1");
    }
  }
  Eigen::MatrixXd logs(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.size(); ++i) logs(i) = probs(i) > 0.0 ? std::log(probs(i)) : kNegInf;
  return Policy(PolicyKind::kTabular, std::move(probs), std::move(logs));
}

Policy Policy::from_logits(const Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (std::isnan(logits(i)) || logits(i) == std::numeric_limits<double>::infinity()) {
      throw InvalidInstance("logits must be finite or -inf");
    }
  }
  Eigen::MatrixXd logs = log_softmax_rows(logits);
  Eigen::MatrixXd probs = exp_or_zero(logs);
  return Policy(PolicyKind::kTabular, std::move(probs), std::move(logs));
}

Policy Policy::uniform(const BanditInstance& instance) {
  return from_logits(Eigen::MatrixXd::Zero(instance.num_contexts(), instance.num_responses()));
}

Policy Policy::softmax_linear(const BanditInstance& instance, Eigen::VectorXd weights) {
  if (weights.size() != instance.feature_dim()) {
    throw InvalidInstance("softmax-linear weights must have the feature dimension");
  }
  if (!weights.allFinite()) throw InvalidInstance("softmax-linear weights must be finite");
  Eigen::MatrixXd logits(instance.num_contexts(), instance.num_responses());
  for (int x = 0; x < instance.num_contexts(); ++x) {
    logits.row(x) = (instance.features(x) * weights).transpose();
  }
  Eigen::MatrixXd logs = log_softmax_rows(logits);
  Eigen::MatrixXd probs = exp_or_zero(logs);
  Policy p(PolicyKind::kSoftmaxLinear, std::move(probs), std::move(logs));
  p.weights_ = std::move(weights);
  return p;
}

void Policy::check_context(int x) const {
  if (x < 0 || x >= num_contexts()) throw std::out_of_range("unknown context index " + std::to_string(x));
}

double Policy::prob(int x, int y) const {
  check_context(x);
  if (y < 0 || y >= num_responses()) throw std::out_of_range("unknown response index " + std::to_string(y));
  return probs_(x, y);
}

ExtendedReal Policy::log_prob(int x, int y) const {
  check_context(x);
  if (y < 0 || y >= num_responses()) throw std::out_of_range("unknown response index " + std::to_string(y));
  return ExtendedReal(log_probs_(x, y));
}

double Policy::finite_log_prob(int x, int y) const {
  const ExtendedReal lp = log_prob(x, y);
  if (!lp.is_finite()) {
    throw SupportError("response " + std::to_string(y) + " has zero probability in context " +
                           std::to_string(x),
                       -1);
  }
  return lp.value();
}

const Eigen::VectorXd& Policy::weights() const {
  if (kind_ != PolicyKind::kSoftmaxLinear) throw std::logic_error("tabular policy has no weight vector");
  return weights_;
}

int Policy::sample(int x, Rng& rng) const {
  check_context(x);
  const Eigen::VectorXd row = probs_.row(x).transpose();
  return rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

// ---------------------------------------------------------------------------
// RewardModel

RewardModel RewardModel::tabular(Eigen::MatrixXd table, std::optional<double> clip_bound) {
  if (!table.allFinite()) throw InvalidInstance("reward table must be finite");
  if (clip_bound && !(*clip_bound >= 0.0)) throw InvalidInstance("clip bound must be nonnegative");
  RewardModel r;
  r.kind_ = RewardKind::kTabular;
  r.table_ = std::move(table);
  r.clip_bound_ = clip_bound;
  return r;
}

RewardModel RewardModel::linear(Eigen::VectorXd weights, std::optional<double> clip_bound) {
  if (!weights.allFinite()) throw InvalidInstance("reward weights must be finite");
  if (clip_bound && !(*clip_bound >= 0.0)) throw InvalidInstance("clip bound must be nonnegative");
  RewardModel r;
  r.kind_ = RewardKind::kLinear;
  r.weights_ = std::move(weights);
  r.clip_bound_ = clip_bound;
  return r;
}

RewardModel RewardModel::clipped(double bound) const {
  if (!(bound >= 0.0)) throw InvalidInstance("clip bound must be nonnegative");
  RewardModel r = *this;
  r.clip_bound_ = bound;
  return r;
}

double RewardModel::clamp(double v) const {
  if (!clip_bound_) return v;
  return std::clamp(v, -*clip_bound_, *clip_bound_);
}

double RewardModel::value(const BanditInstance& instance, int x, int y) const {
  instance.check_context(x);
  instance.check_response(y);
  if (kind_ == RewardKind::kTabular) {
    if (table_.rows() != instance.num_contexts() || table_.cols() != instance.num_responses()) {
      throw InvalidInstance("reward table shape does not match the instance");
    }
    return clamp(table_(x, y));
  }
  if (!instance.has_features()) throw InvalidInstance("linear reward needs a feature map");
  if (weights_.size() != instance.feature_dim()) throw InvalidInstance("reward weights have wrong dimension");
  return clamp(instance.feature(x, y).dot(weights_));
}

Eigen::MatrixXd RewardModel::evaluate(const BanditInstance& instance) const {
  Eigen::MatrixXd out(instance.num_contexts(), instance.num_responses());
  for (int x = 0; x < instance.num_contexts(); ++x) {
    for (int y = 0; y < instance.num_responses(); ++y) out(x, y) = value(instance, x, y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return kNegInf;
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != kNegInf) s += std::exp(v(i) - m);
  }
  return m + std::log(s);
}

Policy gibbs_policy(const BanditInstance& instance, const Policy& ref, const RewardModel& reward, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (ref.num_contexts() != instance.num_contexts() || ref.num_responses() != instance.num_responses()) {
    throw InvalidInstance("reference policy shape does not match the instance");
  }
  Eigen::MatrixXd logits(instance.num_contexts(), instance.num_responses());
  for (int x = 0; x < instance.num_contexts(); ++x) {
    bool any = false;
    for (int y = 0; y < instance.num_responses(); ++y) {
      const double q = ref.prob(x, y);
      if (q > 0.0) {
        logits(x, y) = std::log(q) + reward.value(instance, x, y) / beta;
        any = true;
      } else {
        logits(x, y) = kNegInf;
      }
    }
    if (!any) throw InvalidInstance("reference row " + std::to_string(x) + " has no mass");
  }
  return Policy::from_logits(logits);
}

ExtendedReal objective_value(const BanditInstance& instance, const Policy& policy, const RewardModel& reward,
                             const Policy& ref, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  ExtendedReal total(0.0);
  for (int x = 0; x < instance.num_contexts(); ++x) {
    const double w = instance.context_weight(x);
    if (w == 0.0) continue;
    const ExtendedReal kl = row_kl(policy.probs().row(x).transpose(), ref.probs().row(x).transpose());
    if (!kl.is_finite()) return ExtendedReal::neg_inf();
    double expected_reward = 0.0;
    for (int y = 0; y < instance.num_responses(); ++y) {
      const double p = policy.prob(x, y);
      if (p > 0.0) expected_reward += p * reward.value(instance, x, y);
    }
    total = total + ExtendedReal(w * (expected_reward - beta * kl.value()));
  }
  return total;
}

ExtendedReal kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  return row_kl(p, q);
}

ExtendedReal reverse_kl(const BanditInstance& instance, const Policy& p, const Policy& q) {
  if (p.num_contexts() != instance.num_contexts() || q.num_contexts() != instance.num_contexts() ||
      p.num_responses() != q.num_responses()) {
    throw InvalidInstance("policy shapes do not match the instance");
  }
  double acc = 0.0;
  for (int x = 0; x < instance.num_contexts(); ++x) {
    const double w = instance.context_weight(x);
    if (w == 0.0) continue;
    const ExtendedReal kl = row_kl(p.probs().row(x).transpose(), q.probs().row(x).transpose());
    if (!kl.is_finite()) return ExtendedReal::pos_inf();
    acc += w * kl.value();
  }
  return ExtendedReal(acc);
}

ExtendedReal forward_kl(const BanditInstance& instance, const Policy& ref, const Policy& policy) {
  return reverse_kl(instance, ref, policy);
}

double total_variation(const BanditInstance& instance, const Policy& p, const Policy& q) {
  double acc = 0.0;
  for (int x = 0; x < instance.num_contexts(); ++x) {
    acc += instance.context_weight(x) * 0.5 * (p.probs().row(x) - q.probs().row(x)).cwiseAbs().sum();
  }
  return acc;
}

}  // namespace preflab
