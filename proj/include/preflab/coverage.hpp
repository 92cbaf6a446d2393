#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "preflab/bandit.hpp"

namespace preflab {

inline constexpr double kDefaultRidge = 1e-8;
inline constexpr double kBisectionTol = 1e-10;
inline constexpr int kBisectionMaxIter = 200;

struct CoverageReport {
  ExtendedReal c_glo;
  /// (epsilon, C_epsilon) in the order the radii were requested.
  std::vector<std::pair<double, ExtendedReal>> c_kl_ball;
  std::optional<double> linear_fa_coverage;
  /// (x, y) with rho(x) > 0 and ref(y|x) = 0.
  std::vector<std::pair<int, int>> uncovered_pairs;
  /// True when the KL-ball numbers use per-context budgets epsilon / rho(x)
  /// on a multi-context instance with non-uniform rho, where they are upper bounds.
  bool kl_ball_upper_bound = false;
};

/// sup over policies of max pi(y|x) / ref(y|x): +inf if ref misses a reachable
/// response, else 1 / min ref(y|x) over reachable contexts.
ExtendedReal global_coverage(const BanditInstance& instance, const Policy& ref);

/// Cells (x, y) with rho(x) > 0 that ref never emits.
std::vector<std::pair<int, int>> uncovered_pairs(const BanditInstance& instance, const Policy& ref);

/// Binary KL(p || q) for Bernoulli parameters, with 0 log 0 = 0.
double binary_kl(double p, double q);

/// Largest p in [q, 1] with binary_kl(p, q) <= budget, by bisection.
double max_mass_in_kl_ball(double q, double budget);

/// Worst-case density ratio max pi(y|x)/ref(y|x) over policies whose
/// rho-averaged reverse KL to ref is at most epsilon. Exact for one context;
/// for several contexts each is given the budget epsilon / rho(x).
double kl_ball_coverage(const BanditInstance& instance, const Policy& ref, double epsilon);

enum class SolveMethod { kCholesky, kExplicitInverse };

/// E_{x~rho, y~target} ||phi(x,y)||^2 in the inverse of
/// Sigma_mu = E_{x~rho, y~mu}[phi phi^T] + ridge * I.
/// Throws SingularCovariance when Sigma_mu is numerically singular.
double linear_fa_coverage(const BanditInstance& instance, const Policy& mu, const Policy& target,
                          double ridge = kDefaultRidge, SolveMethod method = SolveMethod::kCholesky);

/// Full report; the linear-FA entry is filled when `fa_target` is given and
/// the instance has features (mu = ref).
CoverageReport coverage_report(const BanditInstance& instance, const Policy& ref, std::span<const double> epsilons,
                               const Policy* fa_target = nullptr, double ridge = kDefaultRidge);

}  // namespace preflab
