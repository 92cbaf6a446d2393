#include "preflab/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string_view>

#include "preflab/coverage.hpp"
#include "preflab/errors.hpp"

namespace preflab {

namespace {

std::string num(double v) { return ExtendedReal(v).to_string(); }

const ExtendedReal& metric(const Metrics& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw std::invalid_argument("metrics lack '" + key + "'");
  return it->second;
}

double finite_metric(const Metrics& m, const std::string& key) { return metric(m, key).to_double(); }

Eigen::MatrixXd row(std::initializer_list<double> values) {
  Eigen::MatrixXd out(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out(0, i++) = v;
  return out;
}

std::vector<int> iota_vector(int begin, int end) {
  std::vector<int> v(static_cast<std::size_t>(end - begin));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

/// Each row: a point of the probability simplex with independent random signs.
Eigen::MatrixXd draw_l1_features(int rows, int dim, Rng& rng) {
  Eigen::MatrixXd phi(rows, dim);
  for (int i = 0; i < rows; ++i) {
    double total = 0.0;
    for (int j = 0; j < dim; ++j) {
      phi(i, j) = rng.exponential();
      total += phi(i, j);
    }
    for (int j = 0; j < dim; ++j) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      phi(i, j) = sign * phi(i, j) / total;
    }
  }
  return phi;
}

int numerical_rank(const Eigen::MatrixXd& m, double threshold) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  return static_cast<int>((s.array() > threshold).count());
}

TraceRecord last_record(const TrainingTrace& trace) {
  if (trace.records.empty()) throw std::logic_error("empty training trace");
  return trace.back();
}

ExtendedReal field(const std::optional<ExtendedReal>& v) {
  if (!v) throw std::logic_error("trace field was not tracked");
  return *v;
}

}  // namespace

bool Verdict::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

// ---------------------------------------------------------------------------

ScenarioResult scenario_prop41(const Prop41Params& p) {
  if (!(p.eps > 0.0)) throw PreconditionError("eps_dpo must be positive");
  if (!(p.beta > 0.0)) throw PreconditionError("beta must be positive");
  const auto [q1, q2] = p.ref_mass;
  if (!(q1 > 0.0 && q2 > 0.0) || std::abs(q1 + q2 - 1.0) > kRowSumTol) {
    throw PreconditionError("ref_mass must be two positive numbers summing to one");
  }
  const auto [r1, r2] = p.r_star;
  if (!std::isfinite(r1) || !std::isfinite(r2)) throw PreconditionError("r_star must be finite");

  const BanditInstance inst = BanditInstance::promptless(3);
  const Policy ref = Policy::tabular(row({q1, q2, 0.0}));
  const RewardModel reward = RewardModel::tabular(row({r1, r2, 0.0}));

  Eigen::Vector2d log_terms(std::log(q1) + r1 / p.beta, std::log(q2) + r2 / p.beta);
  const double log_z = log_sum_exp(log_terms);
  const double shift = std::sqrt(p.eps);
  const double pi1 = std::exp(std::log(q1) + (r1 - shift) / p.beta - log_z);
  const double pi2 = std::exp(std::log(q2) + (r2 - shift) / p.beta - log_z);
  const double pi3 = -std::expm1(-shift / p.beta);
  if (!(pi3 > 0.0)) throw std::logic_error("constructed policy has no mass on the uncovered response");
  const Policy pi = Policy::tabular(row({pi1, pi2, pi3}));

  // Implicit reward of pi with the Gibbs normalizer: beta log(pi/ref) + beta log Z*.
  const double q[2] = {q1, q2};
  const double r[2] = {r1, r2};
  double error = 0.0;
  for (int y = 0; y < 2; ++y) {
    const double implicit = p.beta * (pi.finite_log_prob(0, y) - std::log(q[y])) + p.beta * log_z;
    error += q[y] * (implicit - r[y]) * (implicit - r[y]);
  }

  ScenarioResult res;
  res.name = "prop41";
  res.summary = {{"responses", "3"},
                 {"ref", "[" + num(q1) + ", " + num(q2) + ", 0]"},
                 {"r_star", "[" + num(r1) + ", " + num(r2) + "]"},
                 {"beta", num(p.beta)},
                 {"eps", num(p.eps)}};
  res.metrics = {
      {"eps", ExtendedReal(p.eps)},
      {"in_distribution_error", ExtendedReal(error)},
      {"error_gap", ExtendedReal(std::abs(error - p.eps))},
      {"pi_y1", ExtendedReal(pi1)},
      {"pi_y2", ExtendedReal(pi2)},
      {"pi_y3", ExtendedReal(pi3)},
      {"objective", objective_value(inst, pi, reward, ref, p.beta)},
      {"optimal_objective", objective_value(inst, gibbs_policy(inst, ref, reward, p.beta), reward, ref, p.beta)},
      {"reverse_kl", reverse_kl(inst, pi, ref)},
  };
  res.verdict = judge_prop41(res.metrics);
  return res;
}

Verdict judge_prop41(const Metrics& m) {
  Verdict v;
  v.checks["error_matches_eps"] = finite_metric(m, "error_gap") <= 1e-9;
  v.checks["uncovered_mass_positive"] = finite_metric(m, "pi_y3") > 0.0;
  v.checks["objective_is_neg_inf"] = metric(m, "objective").is_neg_inf();
  v.checks["reverse_kl_is_inf"] = metric(m, "reverse_kl").is_pos_inf();
  return v;
}

// ---------------------------------------------------------------------------

ScenarioResult scenario_ipo_counterexample(const IpoCounterexampleParams& p) {
  if (!(p.beta > 0.0)) throw PreconditionError("beta must be positive");
  if (!(p.p_star > 0.0 && p.p_star < 1.0)) throw PreconditionError("p_star must lie in (0, 1)");
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) throw PreconditionError("alpha must lie in (0, 1]");
  const double target = p.p_star / p.beta;
  const double ratio = std::exp(target);
  double pi3 = 1.0 - (1.0 + ratio) * p.alpha;
  if (pi3 < -1e-12) throw PreconditionError("alpha too large: pi(y3) = 1 - (1 + exp(p*/beta)) alpha < 0");
  const bool boundary = std::abs(pi3) <= 1e-12;
  double pi1 = p.alpha * ratio;
  if (boundary) {
    pi3 = 0.0;
    pi1 = 1.0 - p.alpha;
  }

  const BanditInstance inst = BanditInstance::promptless(3);
  const Policy ref = Policy::tabular(row({0.5, 0.5, 0.0}));
  const Policy pi = Policy::tabular(row({pi1, p.alpha, pi3}));
  const double logit = std::log(p.p_star) - std::log1p(-p.p_star);
  const RewardModel reward = RewardModel::tabular(row({logit, 0.0, 0.0}));

  const PolicyModel model(inst, PolicyParam::kTabularLogits);
  const auto loss = [&](const Eigen::VectorXd& theta) {
    return population_ipo_loss_and_grad(model, theta, ref, reward, p.beta);
  };
  Eigen::VectorXd constructed(3);
  for (int y = 0; y < 3; ++y) constructed(y) = pi.log_prob(0, y).to_double();
  const Eigen::VectorXd minimizer = gradient_steps(loss, model.initial_params(ref), 0.1, 500, false);
  const double minimizer_ratio = minimizer(0) - minimizer(1);
  const double log_ratio = pi.finite_log_prob(0, 0) - pi.finite_log_prob(0, 1);

  ScenarioResult res;
  res.name = "ipo_counterexample";
  res.summary = {{"responses", "3"},
                 {"ref", "[0.5, 0.5, 0]"},
                 {"beta", num(p.beta)},
                 {"alpha", num(p.alpha)},
                 {"p_star", num(p.p_star)}};
  res.metrics = {
      {"target_log_ratio", ExtendedReal(target)},
      {"log_ratio", ExtendedReal(log_ratio)},
      {"log_ratio_gap", ExtendedReal(std::abs(log_ratio - target))},
      {"minimizer_log_ratio", ExtendedReal(minimizer_ratio)},
      {"minimizer_gap", ExtendedReal(std::abs(minimizer_ratio - target))},
      {"population_loss", ExtendedReal(loss(constructed).loss)},
      {"population_loss_min", ExtendedReal(loss(minimizer).loss)},
      {"pi_y3", ExtendedReal(pi3)},
      {"boundary", ExtendedReal(boundary ? 1.0 : 0.0)},
      {"reverse_kl", reverse_kl(inst, pi, ref)},
  };
  res.verdict = judge_ipo_counterexample(res.metrics);
  return res;
}

Verdict judge_ipo_counterexample(const Metrics& m) {
  Verdict v;
  v.checks["minimizer_log_ratio"] = finite_metric(m, "minimizer_gap") <= 1e-4;
  v.checks["constructed_log_ratio"] = finite_metric(m, "log_ratio_gap") <= 1e-9;
  v.checks["constructed_attains_minimum"] =
      finite_metric(m, "population_loss") <= finite_metric(m, "population_loss_min") + 1e-12;
  if (finite_metric(m, "boundary") != 0.0) {
    v.checks["boundary_kl_finite"] = metric(m, "reverse_kl").is_finite();
  } else {
    v.checks["reverse_kl_is_inf"] = metric(m, "reverse_kl").is_pos_inf();
  }
  return v;
}

// ---------------------------------------------------------------------------

ScenarioResult scenario_forward_kl(const ForwardKlParams& p) {
  if (p.n < 3) throw PreconditionError("n must be at least 3");
  if (!(p.beta > 0.0)) throw PreconditionError("beta must be positive");
  if (!(p.r_bound > 0.0)) throw PreconditionError("r_bound must be positive");
  if (p.num_responses < 2) throw PreconditionError("need at least two responses");
  const int k = p.num_responses;
  const double n = p.n;

  const BanditInstance inst = BanditInstance::promptless(k);
  Eigen::MatrixXd ref_row(1, k);
  ref_row(0, 0) = 1.0 / (n * n * n * n);
  ref_row.rightCols(k - 1).setConstant((1.0 - ref_row(0, 0)) / (k - 1));
  const Policy ref = Policy::tabular(ref_row);

  // r* in (0, R] with its maximum R at the rare response.
  Eigen::MatrixXd r_star(1, k);
  r_star(0, 0) = p.r_bound;
  for (int y = 1; y < k; ++y) r_star(0, y) = p.r_bound * y / k;
  Eigen::MatrixXd r_hat = r_star;
  r_hat(0, 0) += n;

  const Policy pi = gibbs_policy(inst, ref, RewardModel::tabular(r_hat), p.beta);
  double error = 0.0;
  for (int y = 0; y < k; ++y) error += ref_row(0, y) * (r_hat(0, y) - r_star(0, y)) * (r_hat(0, y) - r_star(0, y));
  const double expected = 1.0 / (n * n);
  const double bound =
      n / p.beta - 4.0 * std::log(n) - 1.0 / (n * n * n * p.beta) - p.r_bound / (n * n * n * n * p.beta);

  ScenarioResult res;
  res.name = "forward_kl";
  res.summary = {{"responses", std::to_string(k)},
                 {"n", std::to_string(p.n)},
                 {"beta", num(p.beta)},
                 {"r_bound", num(p.r_bound)}};
  res.metrics = {
      {"in_distribution_error", ExtendedReal(error)},
      {"expected_error", ExtendedReal(expected)},
      {"error_gap", ExtendedReal(std::abs(error - expected))},
      {"forward_kl", forward_kl(inst, ref, pi)},
      {"forward_kl_bound", ExtendedReal(bound)},
      {"reverse_kl", reverse_kl(inst, pi, ref)},
  };
  res.verdict = judge_forward_kl(res.metrics);
  return res;
}

Verdict judge_forward_kl(const Metrics& m) {
  Verdict v;
  v.checks["error_is_inverse_n_squared"] = finite_metric(m, "error_gap") <= 1e-12;
  v.checks["forward_kl_above_bound"] = metric(m, "forward_kl") >= metric(m, "forward_kl_bound");
  return v;
}

// ---------------------------------------------------------------------------

ScenarioResult scenario_extrapolation_fa(const ExtrapolationFaParams& p) {
  constexpr int kResponses = 100;
  constexpr int kDim = 16;
  constexpr int kCovered = 50;
  constexpr double kRankThreshold = 1e-8;

  Rng rng(p.seed, Stream::kInstance);
  Eigen::MatrixXd phi(kResponses, kDim);
  int draws = 0;
  bool spans = false;
  while (!spans && draws < p.max_feature_draws) {
    ++draws;
    phi.topRows(kResponses - 1) = draw_l1_features(kResponses - 1, kDim, rng);
    spans = numerical_rank(phi.topRows(kCovered), kRankThreshold) == kDim;
  }
  if (!spans) throw SeedError("covered features do not span the feature space after " + std::to_string(draws) + " draws");
  const int best = kResponses - 1;
  phi.row(best).setZero();
  phi(best, 0) = 1.0;

  Eigen::VectorXd w_star(kDim);
  w_star(0) = 5.0;
  for (int j = 1; j < kDim; ++j) w_star(j) = rng.uniform(-2.0, 2.0);

  const BanditInstance inst = BanditInstance::promptless(phi);
  const Policy ref = Policy::softmax_linear(inst, Eigen::VectorXd::Zero(kDim));
  const std::vector<int> covered = iota_vector(0, kCovered);
  const Policy mu = restrict_support(Policy::uniform(inst), covered);
  const RewardModel truth = RewardModel::linear(w_star);
  const PreferenceDataset data = generate_dataset(inst, mu, truth, p.num_pairs, p.seed);

  std::set<int> winners;
  for (const auto& t : data.triples) winners.insert(t.preferred);
  std::vector<int> pool(winners.begin(), winners.end());
  Rng subset_rng(p.seed, Stream::kSubset);
  const int take = std::min<int>(p.subset_size, static_cast<int>(pool.size()));
  for (int i = 0; i < take; ++i) {
    const auto j = i + static_cast<int>(subset_rng.below(static_cast<std::uint64_t>(pool.size() - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);

  TraceSpec track;
  track.true_reward = truth;
  for (int y : pool) track.preferred_subset.emplace_back(0, y);
  track.best = {0, best};

  TrainConfig cfg;
  cfg.learning_rate = p.learning_rate;
  cfg.iterations = p.iterations;
  cfg.minibatch_size = p.num_pairs;
  cfg.beta = p.beta;
  cfg.online_batch = p.online_batch;
  cfg.clip_bound = p.clip_bound;
  cfg.seed = p.seed;
  cfg.reward_learning_rate = p.reward_learning_rate;
  cfg.reward_iterations = p.reward_iterations;
  cfg.record_every = p.record_every;

  const PolicyModel model(inst, PolicyParam::kSoftmaxLinear);
  const TrainResult rlhf = train_rlhf(model, data, ref, cfg, RlhfMode::kGradient, RewardClass::kLinear, track);
  const TrainResult dpo = train_dpo(model, data, ref, cfg, track);

  const Policy exact = gibbs_policy(inst, ref, *rlhf.reward, p.beta);
  int rank = 0;
  for (int y = 0; y < kResponses; ++y) {
    if (exact.prob(0, y) > exact.prob(0, best)) ++rank;
  }

  ScenarioResult res;
  res.name = "extrapolation_fa";
  res.summary = {{"responses", std::to_string(kResponses)},
                 {"feature_dim", std::to_string(kDim)},
                 {"covered_responses", std::to_string(kCovered)},
                 {"pairs", std::to_string(p.num_pairs)},
                 {"seed", std::to_string(p.seed)},
                 {"beta", num(p.beta)},
                 {"learning_rate", num(p.learning_rate)},
                 {"iterations", std::to_string(p.iterations)},
                 {"batch", "full"},
                 {"clip_bound", num(p.clip_bound)},
                 {"online_batch", std::to_string(p.online_batch)}};
  const auto add = [&](const std::string& prefix, const TrainingTrace& trace) {
    res.metrics[prefix + "_logp_best_initial"] = field(trace.front().logp_best);
    res.metrics[prefix + "_logp_best_final"] = field(last_record(trace).logp_best);
    res.metrics[prefix + "_mean_logp_preferred_initial"] = field(trace.front().mean_logp_preferred);
    res.metrics[prefix + "_mean_logp_preferred_final"] = field(last_record(trace).mean_logp_preferred);
    res.metrics[prefix + "_regret_final"] = field(last_record(trace).regret);
  };
  add("rlhf", rlhf.trace);
  add("dpo", dpo.trace);
  res.metrics["exact_rlhf_best_rank"] = ExtendedReal(rank);
  res.metrics["feature_draws"] = ExtendedReal(draws);
  res.metrics["preferred_subset_size"] = ExtendedReal(take);
  res.traces = {{"rlhf", rlhf.trace}, {"dpo", dpo.trace}};
  res.verdict = judge_extrapolation_fa(res.metrics);
  return res;
}

Verdict judge_extrapolation_fa(const Metrics& m) {
  Verdict v;
  for (const std::string prefix : {"rlhf", "dpo"}) {
    v.checks[prefix + "_best_rises"] = metric(m, prefix + "_logp_best_final") > metric(m, prefix + "_logp_best_initial");
    v.checks[prefix + "_preferred_falls"] =
        metric(m, prefix + "_mean_logp_preferred_final") < metric(m, prefix + "_mean_logp_preferred_initial");
  }
  return v;
}

// ---------------------------------------------------------------------------

ScenarioResult scenario_extrapolation_tabular(const ExtrapolationTabularParams& p) {
  constexpr int kResponses = 500;
  constexpr int kCovered = 250;

  Rng rng(p.seed, Stream::kInstance);
  Eigen::MatrixXd r_star(1, kResponses);
  for (int y = 0; y < kResponses; ++y) r_star(0, y) = rng.uniform(-10.0, 10.0);

  const BanditInstance inst = BanditInstance::promptless(kResponses);
  const Policy ref = Policy::uniform(inst);
  const Policy mu = restrict_support(ref, iota_vector(0, kCovered));
  const RewardModel truth = RewardModel::tabular(r_star);
  const PreferenceDataset data = generate_dataset(inst, mu, truth, p.num_pairs, p.seed);

  TraceSpec track;
  track.true_reward = truth;
  track.ood_responses = iota_vector(kCovered, kResponses);

  TrainConfig cfg;
  cfg.learning_rate = p.learning_rate;
  cfg.iterations = p.iterations;
  cfg.minibatch_size = p.num_pairs;
  cfg.beta = p.beta;
  cfg.seed = p.seed;
  cfg.record_every = p.record_every;

  const PolicyModel model(inst, PolicyParam::kTabularLogits);
  const TrainResult dpo = train_dpo(model, data, ref, cfg, track);

  double ood_mass = 0.0, ood_reward = 0.0, in_mass = 0.0, in_reward = 0.0;
  for (int y = 0; y < kResponses; ++y) {
    const double w = dpo.policy.prob(0, y);
    if (y < kCovered) {
      in_mass += w;
      in_reward += w * r_star(0, y);
    } else {
      ood_mass += w;
      ood_reward += w * r_star(0, y);
    }
  }

  ScenarioResult res;
  res.name = "extrapolation_tabular";
  res.summary = {{"responses", std::to_string(kResponses)},
                 {"covered_responses", std::to_string(kCovered)},
                 {"pairs", std::to_string(p.num_pairs)},
                 {"seed", std::to_string(p.seed)},
                 {"beta", num(p.beta)},
                 {"learning_rate", num(p.learning_rate)},
                 {"iterations", std::to_string(p.iterations)},
                 {"batch", "full"}};
  res.metrics = {
      {"mean_prob_ood_initial", field(dpo.trace.front().mean_prob_ood)},
      {"mean_prob_ood_final", field(last_record(dpo.trace).mean_prob_ood)},
      {"final_iteration", ExtendedReal(last_record(dpo.trace).iteration)},
      {"ood_weighted_reward", ExtendedReal(ood_reward / ood_mass)},
      {"in_support_weighted_reward", ExtendedReal(in_reward / in_mass)},
      {"regret_final", field(last_record(dpo.trace).regret)},
  };
  res.traces = {{"dpo", dpo.trace}};
  res.verdict = judge_extrapolation_tabular(res.metrics);
  return res;
}

Verdict judge_extrapolation_tabular(const Metrics& m) {
  Verdict v;
  v.checks["initial_ood_mass_is_half"] = std::abs(finite_metric(m, "mean_prob_ood_initial") - 0.5) <= 1e-9;
  v.checks["ood_mass_rises"] = metric(m, "mean_prob_ood_final") > metric(m, "mean_prob_ood_initial");
  return v;
}

// ---------------------------------------------------------------------------

ScenarioResult scenario_separation(const SeparationParams& p) {
  constexpr int kResponses = 10;
  constexpr int kCovered = 6;
  if (!(p.beta > 0.0)) throw PreconditionError("beta must be positive");
  if (!(p.lambda > 0.0)) throw PreconditionError("lambda must be positive");

  Rng rng(p.seed, Stream::kInstance);
  Eigen::MatrixXd ref_row = Eigen::MatrixXd::Zero(1, kResponses);
  for (int y = 0; y < kCovered; ++y) ref_row(0, y) = rng.exponential();
  ref_row /= ref_row.sum();
  Eigen::MatrixXd r_star(1, kResponses);
  for (int y = 0; y < kResponses; ++y) r_star(0, y) = rng.uniform(-1.0, 1.0);

  const BanditInstance inst = BanditInstance::promptless(kResponses);
  const Policy ref = Policy::tabular(ref_row);
  const RewardModel truth = RewardModel::tabular(r_star);
  const PreferenceDataset data = generate_dataset(inst, ref, truth, p.num_pairs, p.seed);

  TraceSpec track;
  track.true_reward = truth;

  TrainConfig cfg;
  cfg.learning_rate = p.learning_rate;
  cfg.iterations = p.iterations;
  cfg.minibatch_size = p.minibatch_size;
  cfg.beta = p.beta;
  cfg.online_batch = p.online_batch;
  cfg.clip_bound = p.clip_bound;
  cfg.seed = p.seed;
  cfg.record_every = p.record_every;

  const PolicyModel model(inst, PolicyParam::kTabularLogits);
  const TrainResult dpo = train_dpo(model, data, ref, cfg, track);
  TrainConfig hypo_cfg = cfg;
  hypo_cfg.lambda = p.lambda;
  const TrainResult hypo = train_hypo(model, data, ref, hypo_cfg, track);
  const TrainResult rlhf = train_rlhf(model, data, ref, cfg, RlhfMode::kExact, RewardClass::kTabular, track);

  const double bound = 2.0 * p.clip_bound / p.beta;
  const std::vector<double> radii{bound};
  const CoverageReport cov = coverage_report(inst, ref, radii);

  ScenarioResult res;
  res.name = "separation";
  res.summary = {{"responses", std::to_string(kResponses)},
                 {"covered_responses", std::to_string(kCovered)},
                 {"pairs", std::to_string(p.num_pairs)},
                 {"seed", std::to_string(p.seed)},
                 {"beta", num(p.beta)},
                 {"lambda", num(p.lambda)},
                 {"clip_bound", num(p.clip_bound)},
                 {"learning_rate", num(p.learning_rate)},
                 {"iterations", std::to_string(p.iterations)},
                 {"minibatch_size", std::to_string(p.minibatch_size)},
                 {"online_batch", std::to_string(p.online_batch)}};
  res.metrics = {
      {"reverse_kl_dpo", reverse_kl(inst, dpo.policy, ref)},
      {"reverse_kl_hypo", reverse_kl(inst, hypo.policy, ref)},
      {"reverse_kl_rlhf", reverse_kl(inst, rlhf.policy, ref)},
      {"rlhf_kl_bound", ExtendedReal(bound)},
      {"regret_dpo", field(last_record(dpo.trace).regret)},
      {"regret_hypo", field(last_record(hypo.trace).regret)},
      {"regret_rlhf", field(last_record(rlhf.trace).regret)},
      {"c_glo", cov.c_glo},
      {"c_kl_ball_at_bound", cov.c_kl_ball.front().second},
      {"num_uncovered", ExtendedReal(static_cast<double>(cov.uncovered_pairs.size()))},
  };
  res.traces = {{"dpo", dpo.trace}, {"hypo", hypo.trace}, {"rlhf", rlhf.trace}};
  res.verdict = judge_separation(res.metrics);
  return res;
}

Verdict judge_separation(const Metrics& m) {
  Verdict v;
  v.checks["rlhf_kl_within_bound"] = metric(m, "reverse_kl_rlhf") <= metric(m, "rlhf_kl_bound");
  v.checks["hypo_kl_below_dpo"] = metric(m, "reverse_kl_hypo") < metric(m, "reverse_kl_dpo");
  v.checks["c_glo_is_inf"] = metric(m, "c_glo").is_pos_inf();
  v.checks["four_uncovered"] = finite_metric(m, "num_uncovered") == 4.0;
  return v;
}

// ---------------------------------------------------------------------------

Verdict judge(const std::string& scenario, const Metrics& m) {
  if (scenario == "prop41") return judge_prop41(m);
  if (scenario == "ipo_counterexample") return judge_ipo_counterexample(m);
  if (scenario == "forward_kl") return judge_forward_kl(m);
  if (scenario == "extrapolation_fa") return judge_extrapolation_fa(m);
  if (scenario == "extrapolation_tabular") return judge_extrapolation_tabular(m);
  if (scenario == "separation") return judge_separation(m);
  throw std::invalid_argument("unknown scenario: " + scenario);
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"prop41",           "ipo_counterexample",    "forward_kl",
                                              "extrapolation_fa", "extrapolation_tabular", "separation"};
  return names;
}

namespace {

template <typename T>
void apply(const std::optional<T>& from, T& to) {
  if (from) to = *from;
}

void allow_only(const ScenarioOptions& o, std::initializer_list<std::string_view> allowed, const std::string& scenario) {
  const std::pair<std::string_view, bool> given[] = {
      {"beta", o.beta.has_value()},   {"eps", o.eps.has_value()},
      {"alpha", o.alpha.has_value()}, {"p_star", o.p_star.has_value()},
      {"lambda", o.lambda.has_value()}, {"r_bound", o.r_bound.has_value()},
      {"clip", o.clip.has_value()},   {"learning_rate", o.learning_rate.has_value()},
      {"n", o.n.has_value()},         {"iterations", o.iterations.has_value()},
  };
  for (const auto& [key, present] : given) {
    if (present && std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("option '" + std::string(key) + "' does not apply to scenario " + scenario);
    }
  }
}

}  // namespace

ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& o) {
  if (name == "prop41") {
    allow_only(o, {"beta", "eps"}, name);
    Prop41Params p;
    apply(o.beta, p.beta);
    apply(o.eps, p.eps);
    return scenario_prop41(p);
  }
  if (name == "ipo_counterexample") {
    allow_only(o, {"beta", "alpha", "p_star"}, name);
    IpoCounterexampleParams p;
    apply(o.beta, p.beta);
    apply(o.alpha, p.alpha);
    apply(o.p_star, p.p_star);
    return scenario_ipo_counterexample(p);
  }
  if (name == "forward_kl") {
    allow_only(o, {"n", "beta", "r_bound"}, name);
    ForwardKlParams p;
    apply(o.n, p.n);
    apply(o.beta, p.beta);
    apply(o.r_bound, p.r_bound);
    return scenario_forward_kl(p);
  }
  if (name == "extrapolation_fa") {
    allow_only(o, {"beta", "learning_rate", "iterations", "clip"}, name);
    ExtrapolationFaParams p;
    apply(o.seed, p.seed);
    apply(o.beta, p.beta);
    apply(o.learning_rate, p.learning_rate);
    apply(o.iterations, p.iterations);
    apply(o.clip, p.clip_bound);
    return scenario_extrapolation_fa(p);
  }
  if (name == "extrapolation_tabular") {
    allow_only(o, {"beta", "learning_rate", "iterations", "n"}, name);
    ExtrapolationTabularParams p;
    apply(o.seed, p.seed);
    apply(o.beta, p.beta);
    apply(o.learning_rate, p.learning_rate);
    apply(o.iterations, p.iterations);
    apply(o.n, p.num_pairs);
    return scenario_extrapolation_tabular(p);
  }
  if (name == "separation") {
    allow_only(o, {"beta", "lambda", "clip", "learning_rate", "iterations", "n"}, name);
    SeparationParams p;
    apply(o.seed, p.seed);
    apply(o.beta, p.beta);
    apply(o.lambda, p.lambda);
    apply(o.clip, p.clip_bound);
    apply(o.learning_rate, p.learning_rate);
    apply(o.iterations, p.iterations);
    apply(o.n, p.num_pairs);
    return scenario_separation(p);
  }
  throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace preflab
