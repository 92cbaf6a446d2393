// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "preflab/coverage.hpp"
#include "preflab/learners.hpp"
#include "preflab/preference.hpp"
#include "preflab/scenarios.hpp"

using namespace preflab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

Eigen::MatrixXd row(const oracle::Vec& v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

oracle::Vec full_support_simplex(oracle::TestRng& rng, int k) {
  auto p = rng.simplex(k);
  for (auto& v : p) v = 0.5 * v + 0.5 / k;
  return p;
}

oracle::Vec uniform_vec(oracle::TestRng& rng, int k, double lo, double hi) {
  oracle::Vec v(static_cast<std::size_t>(k));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

// 1 ---------------------------------------------------------------------------
void criterion1(Outcome& o) {
  for (double eps : {1e-2, 1e-4}) {
    Prop41Params p;
    p.beta = 1.0;
    p.eps = eps;
    p.ref_mass = {0.5, 0.5};
    const auto r = scenario_prop41(p);
    const double err = r.metrics.at("in_distribution_error").value();
    const double pi3 = r.metrics.at("pi_y3").value();
    o.detail << " eps=" << eps << ": error=" << err << " pi3=" << pi3
             << " J=" << r.metrics.at("objective").to_string() << ";";
    o.require(std::abs(err - eps) <= 1e-9, "error equals eps");
    o.require(pi3 > 0.0, "pi(y3) > 0");
    o.require(r.metrics.at("objective").is_neg_inf(), "J = -inf");
  }
}

// 2 ---------------------------------------------------------------------------
void criterion2(Outcome& o) {
  oracle::TestRng rng(2002);
  const double clip = 5.0, beta = 0.1, bound = 2 * clip / beta;
  double worst_exact = 0.0, worst_gradient = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int k = 2 + i % 9;
    const auto inst = BanditInstance::promptless(k);
    const Policy ref = Policy::tabular(row(full_support_simplex(rng, k)));
    const auto truth = RewardModel::tabular(row(uniform_vec(rng, k, -10.0, 10.0)));
    const auto data = generate_dataset(inst, ref, truth, 300, static_cast<std::uint64_t>(i));
    const PolicyModel model(inst, PolicyParam::kTabularLogits);
    TrainConfig cfg;
    cfg.beta = beta;
    cfg.clip_bound = clip;
    cfg.reward_iterations = 500;
    cfg.learning_rate = 0.02;
    cfg.iterations = 200;
    cfg.online_batch = 16;
    cfg.seed = static_cast<std::uint64_t>(i);
    const auto exact = train_rlhf(model, data, ref, cfg, RlhfMode::kExact, RewardClass::kTabular);
    const auto grad = train_rlhf(model, data, ref, cfg, RlhfMode::kGradient, RewardClass::kTabular);
    for (const auto& rec : exact.trace.records) worst_exact = std::max(worst_exact, rec.reverse_kl->to_double());
    for (const auto& rec : grad.trace.records) worst_gradient = std::max(worst_gradient, rec.reverse_kl->to_double());
  }
  o.detail << " max exact KL=" << worst_exact << " max gradient KL=" << worst_gradient << " bound=" << bound;
  o.require(worst_exact <= bound + 1e-9, "exact RLHF KL <= 2R'/beta");
  o.require(worst_gradient <= bound + 0.5, "gradient RLHF KL <= 2R'/beta + 0.5");
}

// 3 ---------------------------------------------------------------------------
void criterion3(Outcome& o) {
  IpoCounterexampleParams p;
  const auto r = scenario_ipo_counterexample(p);
  const double target = p.p_star / p.beta;
  const double minimizer = r.metrics.at("minimizer_log_ratio").value();
  o.detail << " minimizer log-ratio=" << minimizer << " target=" << target
           << " pi3=" << r.metrics.at("pi_y3").to_string() << " KL=" << r.metrics.at("reverse_kl").to_string();
  o.require(std::abs(minimizer - target) <= 1e-4, "population minimizer log-ratio = p*/beta");
  o.require(std::abs(r.metrics.at("log_ratio").value() - target) <= 1e-4, "family member log-ratio = p*/beta");
  o.require(r.metrics.at("pi_y3").value() > 0.0, "pi(y3) > 0");
  o.require(r.metrics.at("reverse_kl").is_pos_inf(), "KL = +inf");
}

// 4 ---------------------------------------------------------------------------
void criterion4(Outcome& o) {
  ForwardKlParams p;
  p.n = 50;
  p.beta = 1.0;
  p.r_bound = 1.0;
  const auto r = scenario_forward_kl(p);
  const double n = 50.0;
  const double err = r.metrics.at("in_distribution_error").value();
  const double fkl = r.metrics.at("forward_kl").value();
  const double bound = n - 4 * std::log(n) - 1 / std::pow(n, 3) - 1 / std::pow(n, 4);
  o.detail << " error=" << err << " forward KL=" << fkl << " bound=" << bound;
  o.require(std::abs(err - 1.0 / 2500.0) <= 1e-12, "error = 1/2500");
  o.require(fkl >= bound, "forward KL >= bound");
}

// 5 ---------------------------------------------------------------------------
void criterion5(Outcome& o) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto t0 = std::chrono::steady_clock::now();
    ExtrapolationFaParams p;
    p.seed = seed;
    const auto r = scenario_extrapolation_fa(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& m = r.metrics;
    o.detail << " seed " << seed << ": rlhf best " << m.at("rlhf_logp_best_initial").to_string() << "->"
             << m.at("rlhf_logp_best_final").to_string() << ", pref " << m.at("rlhf_mean_logp_preferred_initial").to_string()
             << "->" << m.at("rlhf_mean_logp_preferred_final").to_string() << "; dpo best "
             << m.at("dpo_logp_best_initial").to_string() << "->" << m.at("dpo_logp_best_final").to_string()
             << ", pref " << m.at("dpo_mean_logp_preferred_initial").to_string() << "->"
             << m.at("dpo_mean_logp_preferred_final").to_string() << " (" << secs << " s);";
    for (const char* algo : {"rlhf", "dpo"}) {
      const std::string a(algo);
      o.require(m.at(a + "_logp_best_final") > m.at(a + "_logp_best_initial"), a + " logp_best rises");
      o.require(m.at(a + "_mean_logp_preferred_final") < m.at(a + "_mean_logp_preferred_initial"),
                a + " mean_logp_preferred falls");
    }
    o.require(secs < 60.0, "runtime < 60 s per seed");
  }
}

// 6 ---------------------------------------------------------------------------
void criterion6(Outcome& o) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto t0 = std::chrono::steady_clock::now();
    ExtrapolationTabularParams p;
    p.seed = seed;
    const auto r = scenario_extrapolation_tabular(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double initial = r.metrics.at("mean_prob_ood_initial").value();
    const double final_mass = r.metrics.at("mean_prob_ood_final").value();
    o.detail << " seed " << seed << ": ood mass " << initial << "->" << final_mass << " at iteration "
             << r.metrics.at("final_iteration").to_string() << " (" << secs << " s);";
    o.require(std::abs(initial - 0.5) <= 1e-9, "initial OOD mass 0.5");
    o.require(r.metrics.at("final_iteration").value() == 5000.0, "trained 5000 iterations");
    o.require(final_mass > initial, "OOD mass rises");
    o.require(secs < 60.0, "runtime < 60 s per seed");
  }
}

// 7 ---------------------------------------------------------------------------
void criterion7(Outcome& o) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const auto t0 = std::chrono::steady_clock::now();
    SeparationParams p;
    p.seed = seed;
    const auto r = scenario_separation(p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& m = r.metrics;
    const double bound = 2 * p.clip_bound / p.beta;
    o.detail << " seed " << seed << ": KL dpo=" << m.at("reverse_kl_dpo").to_string()
             << " hypo=" << m.at("reverse_kl_hypo").to_string() << " rlhf=" << m.at("reverse_kl_rlhf").to_string()
             << " (" << secs << " s);";
    o.require(m.at("reverse_kl_dpo") > m.at("reverse_kl_hypo"), "KL(DPO) > KL(HyPO)");
    o.require(m.at("reverse_kl_rlhf") <= ExtendedReal(bound), "KL(RLHF) <= 2R'/beta");
    o.require(secs < 30.0, "runtime < 30 s per seed");
  }
}

// 8 ---------------------------------------------------------------------------
void criterion8(Outcome& o) {
  oracle::TestRng rng(808);
  double worst_dpo = 0.0, worst_ipo = 0.0, worst_kl = 0.0;
  for (int point = 0; point < 20; ++point) {
    const int contexts = 1 + point % 2;
    const int k = 3 + point % 5;
    const bool linear = point % 2 == 1;
    std::vector<Eigen::MatrixXd> feats;
    for (int x = 0; x < contexts; ++x) {
      Eigen::MatrixXd phi(k, 3);
      for (int y = 0; y < k; ++y)
        for (int j = 0; j < 3; ++j) phi(y, j) = rng.uniform(-1, 1);
      feats.push_back(phi);
    }
    const Eigen::VectorXd weights = Eigen::VectorXd::Constant(contexts, 1.0 / contexts);
    const BanditInstance inst = linear ? BanditInstance(weights, feats) : BanditInstance(weights, k);
    const PolicyModel model(inst, linear ? PolicyParam::kSoftmaxLinear : PolicyParam::kTabularLogits);
    Eigen::MatrixXd ref_probs(contexts, k);
    for (int x = 0; x < contexts; ++x) ref_probs.row(x) = row(rng.simplex(k));
    const Policy ref = Policy::tabular(ref_probs);
    Eigen::VectorXd theta(model.dim());
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = rng.uniform(-1.5, 1.5);
    std::vector<PreferenceTriple> batch;
    while (batch.size() < 10) {
      const int x = static_cast<int>(rng.uniform() * contexts);
      const int a = static_cast<int>(rng.uniform() * k), b = static_cast<int>(rng.uniform() * k);
      if (a != b) batch.push_back({x, a, b});
    }
    const double beta = rng.uniform(0.1, 2.0);
    worst_dpo = std::max(
        worst_dpo,
        relative_error(dpo_loss_and_grad(model, theta, ref, batch, beta).grad,
                       finite_difference_gradient(
                           [&](const Eigen::VectorXd& t) { return dpo_loss_and_grad(model, t, ref, batch, beta).loss; },
                           theta, 1e-5)));
    worst_ipo = std::max(
        worst_ipo,
        relative_error(ipo_loss_and_grad(model, theta, ref, batch, beta).grad,
                       finite_difference_gradient(
                           [&](const Eigen::VectorXd& t) { return ipo_loss_and_grad(model, t, ref, batch, beta).loss; },
                           theta, 1e-5)));
    Rng draw(static_cast<std::uint64_t>(point), Stream::kOnline);
    const auto samples = draw_online_samples(model.policy(theta), ref, batch, 16, draw);
    worst_kl = std::max(
        worst_kl, relative_error(kl_surrogate_and_grad(model, theta, samples).grad,
                                 finite_difference_gradient(
                                     [&](const Eigen::VectorXd& t) { return kl_surrogate_and_grad(model, t, samples).loss; },
                                     theta, 1e-5)));
  }
  o.detail << " worst relative error dpo=" << worst_dpo << " ipo=" << worst_ipo << " kl=" << worst_kl;
  o.require(worst_dpo < 1e-5, "DPO gradient");
  o.require(worst_ipo < 1e-5, "IPO gradient");
  o.require(worst_kl < 1e-5, "KL surrogate gradient");
}

// 9 ---------------------------------------------------------------------------
void criterion9(Outcome& o) {
  oracle::TestRng rng(909);
  double worst_a = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto inst = BanditInstance::promptless(4);
    const Policy ref = Policy::tabular(row(full_support_simplex(rng, 4)));
    const auto truth = RewardModel::tabular(row(uniform_vec(rng, 4, -1.0, 1.0)));
    const auto data = generate_dataset(inst, ref, truth, 1000, static_cast<std::uint64_t>(i));
    const PolicyModel model(inst, PolicyParam::kTabularLogits);
    TrainConfig cfg;
    cfg.beta = 0.5;
    cfg.clip_bound = 1.0;
    cfg.learning_rate = 0.05;
    cfg.iterations = 10000;
    cfg.online_batch = 128;
    cfg.record_every = cfg.iterations;
    cfg.seed = static_cast<std::uint64_t>(i);
    const auto exact = train_rlhf(model, data, ref, cfg, RlhfMode::kExact, RewardClass::kTabular);
    const auto grad = train_rlhf(model, data, ref, cfg, RlhfMode::kGradient, RewardClass::kTabular);
    worst_a = std::max(worst_a, total_variation(inst, exact.policy, grad.policy));
  }

  double worst_b = 0.0;
  const auto inst3 = BanditInstance::promptless(3);
  const PolicyModel model3(inst3, PolicyParam::kTabularLogits);
  for (int i = 0; i < 5; ++i) {
    const auto ref = full_support_simplex(rng, 3);
    const auto r = uniform_vec(rng, 3, -1.0, 1.0);
    const double beta = rng.uniform(0.5, 1.5);
    const auto target = oracle::gibbs(ref, r, beta);
    const Policy ref_policy = Policy::tabular(row(ref));
    const auto truth = RewardModel::tabular(row(r));
    const Eigen::VectorXd theta = gradient_steps(
        [&](const Eigen::VectorXd& t) { return population_dpo_loss_and_grad(model3, t, ref_policy, truth, beta); },
        model3.initial_params(ref_policy), 5.0, 20000, true);
    const Policy learned = model3.policy(theta);
    const oracle::Vec lp{learned.prob(0, 0), learned.prob(0, 1), learned.prob(0, 2)};
    const auto grid =
        oracle::grid_argmax_simplex3([&](const oracle::Vec& p) { return oracle::population_dpo(p, ref, r, beta); });
    worst_b = std::max({worst_b, oracle::total_variation(lp, target), oracle::total_variation(grid, target)});
  }

  double worst_c = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double q = i == 0 ? 0.5 : rng.uniform(0.05, 0.95);
    const double eps = i == 0 ? 0.1 : rng.uniform(1e-3, 1.0);
    worst_c = std::max(worst_c, std::abs(max_mass_in_kl_ball(q, eps) - oracle::kl_ball_grid_scan(q, eps, 1e-6)));
  }
  o.detail << " (a) max TV=" << worst_a << " (b) max TV=" << worst_b << " (c) max gap=" << worst_c;
  o.require(worst_a <= 1e-2, "gradient RLHF vs exact Gibbs");
  o.require(worst_b <= 1e-3, "population DPO vs Gibbs");
  o.require(worst_c <= 1e-5, "bisection vs grid scan");
}

// 10 --------------------------------------------------------------------------
void criterion10(Outcome& o) {
  oracle::TestRng rng(1010);
  double worst_chain = -1e300, worst_decomposition = -1e300;
  for (int i = 0; i < 50; ++i) {
    const int k = 2 + i % 7;
    const auto inst = BanditInstance::promptless(k);
    const auto ref = full_support_simplex(rng, k);
    const auto r_star = uniform_vec(rng, k, -2.0, 2.0);
    const double beta = rng.uniform(0.2, 2.0);
    const Policy ref_policy = Policy::tabular(row(ref));
    const auto truth = RewardModel::tabular(row(r_star));
    const auto data = generate_dataset(inst, ref_policy, truth, 400, static_cast<std::uint64_t>(i));
    TrainConfig cfg;
    cfg.reward_iterations = 500;
    const RewardModel fitted = fit_reward_bt(inst, data, RewardClass::kTabular, cfg);
    oracle::Vec r_hat(static_cast<std::size_t>(k));
    for (int y = 0; y < k; ++y) r_hat[y] = fitted.value(inst, 0, y);

    const Policy pi_star = gibbs_policy(inst, ref_policy, truth, beta);
    const Policy pi_hat = gibbs_policy(inst, ref_policy, fitted, beta);
    const double regret = (objective_value(inst, pi_star, truth, ref_policy, beta) -
                           objective_value(inst, pi_hat, truth, ref_policy, beta))
                              .value();
    const auto ps = oracle::gibbs(ref, r_star, beta);
    const auto ph = oracle::gibbs(ref, r_hat, beta);
    double decomposition = 0.0, pairwise_sq = 0.0;
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double delta = r_star[a] - r_hat[a] - r_star[b] + r_hat[b];
        decomposition += ps[a] * ph[b] * delta;
        pairwise_sq += ref[a] * ref[b] * delta * delta;
      }
    }
    const double c_glo = global_coverage(inst, ref_policy).value();
    worst_decomposition = std::max(worst_decomposition, regret - decomposition);
    worst_chain = std::max(worst_chain, regret - c_glo * std::sqrt(pairwise_sq));
  }
  o.detail << " max(regret - decomposition)=" << worst_decomposition
           << " max(regret - C_glo*sqrt(err))=" << worst_chain;
  o.require(worst_decomposition <= 1e-9, "objective decomposition");
  o.require(worst_chain <= 1e-9, "global coverage regret bound");
}

// 11 --------------------------------------------------------------------------
void criterion11(Outcome& o) {
  oracle::TestRng rng(1111);
  int pairs = 0, outside = 0;
  for (int i = 0; i < 5; ++i) {
    const int k = 3 + i % 3;
    const auto inst = BanditInstance::promptless(k);
    const auto r = uniform_vec(rng, k, -2.0, 2.0);
    const auto data = generate_dataset(inst, Policy::tabular(row(full_support_simplex(rng, k))),
                                       RewardModel::tabular(row(r)), 10000, static_cast<std::uint64_t>(100 + i));
    for (const auto& [key, tally] : tally_pairs(data)) {
      const auto [x, a, b] = key;
      (void)x;
      const double p = oracle::sigmoid(r[a] - r[b]);
      const double rate = tally.first_wins / static_cast<double>(tally.count);
      ++pairs;
      if (std::abs(rate - p) > oracle::binomial_band(p, tally.count)) ++outside;
    }
  }
  o.detail << " " << pairs << " pairs, " << outside << " outside the band";
  o.require(outside == 0, "all pair rates inside the 99.7% band");
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Entry {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Entry> entries{
      {1, "constructed policy escapes the reference support", 1.0, criterion1},
      {2, "clipped RLHF reverse KL bound", 10.0, criterion2},
      {3, "IPO population minimizer leaves the support", 1.0, criterion3},
      {4, "forward KL blow-up construction", 1.0, criterion4},
      {5, "linear extrapolation trends", 180.0, criterion5},
      {6, "tabular out-of-support mass trend", 180.0, criterion6},
      {7, "DPO / HyPO / RLHF separation", 90.0, criterion7},
      {8, "analytic gradients vs finite differences", 5.0, criterion8},
      {9, "oracle equivalences", 60.0, criterion9},
      {10, "regret decomposition and coverage bound", 10.0, criterion10},
      {11, "BT binomial band", 5.0, criterion11},
  };
  int failures = 0;
  int ran = 0;
  for (const auto& e : entries) {
    if (!only.empty() && std::find(only.begin(), only.end(), e.id) == only.end()) continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.run(o);
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << " [exception: " << ex.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= e.budget_s) o.require(false, "runtime budget");
    std::printf("criterion %2d %s: %s (%.2f s, budget %.0f s)%s\n", e.id, o.pass ? "PASS" : "FAIL", e.name, secs,
                e.budget_s, o.detail.str().c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
