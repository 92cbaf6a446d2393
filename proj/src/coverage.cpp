#include "preflab/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "preflab/errors.hpp"

namespace preflab {

namespace {

double xlogx_over(double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; }

}  // namespace

ExtendedReal global_coverage(const BanditInstance& instance, const Policy& ref) {
  double min_prob = std::numeric_limits<double>::infinity();
  for (int x = 0; x < instance.num_contexts(); ++x) {
    if (instance.context_weight(x) <= 0.0) continue;
    for (int y = 0; y < instance.num_responses(); ++y) {
      const double q = ref.prob(x, y);
      if (q <= 0.0) return ExtendedReal::pos_inf();
      min_prob = std::min(min_prob, q);
    }
  }
  return ExtendedReal(1.0 / min_prob);
}

std::vector<std::pair<int, int>> uncovered_pairs(const BanditInstance& instance, const Policy& ref) {
  std::vector<std::pair<int, int>> out;
  for (int x = 0; x < instance.num_contexts(); ++x) {
    if (instance.context_weight(x) <= 0.0) continue;
    for (int y = 0; y < instance.num_responses(); ++y) {
      if (ref.prob(x, y) <= 0.0) out.emplace_back(x, y);
    }
  }
  return out;
}

double binary_kl(double p, double q) { return xlogx_over(p, q) + xlogx_over(1.0 - p, 1.0 - q); }

double max_mass_in_kl_ball(double q, double budget) {
  if (!(q > 0.0 && q <= 1.0)) throw PreconditionError("reference mass must lie in (0, 1]");
  if (!(budget >= 0.0)) throw PreconditionError("KL budget must be nonnegative");
  if (budget == 0.0) return q;
  if (q == 1.0) return 1.0;
  // binary_kl(., q) increases on [q, 1] from 0 to -log q.
  if (budget >= -std::log(q)) return 1.0;
  double lo = q;
  double hi = 1.0;
  for (int it = 0; it < kBisectionMaxIter && hi - lo > kBisectionTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (binary_kl(mid, q) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double kl_ball_coverage(const BanditInstance& instance, const Policy& ref, double epsilon) {
  if (!(epsilon >= 0.0)) throw PreconditionError("epsilon must be nonnegative");
  double worst = 1.0;
  for (int x = 0; x < instance.num_contexts(); ++x) {
    const double w = instance.context_weight(x);
    if (w <= 0.0) continue;
    const double budget = epsilon / w;
    for (int y = 0; y < instance.num_responses(); ++y) {
      const double q = ref.prob(x, y);
      if (q <= 0.0) continue;
      worst = std::max(worst, max_mass_in_kl_ball(q, budget) / q);
    }
  }
  return worst;
}

double linear_fa_coverage(const BanditInstance& instance, const Policy& mu, const Policy& target, double ridge,
                          SolveMethod method) {
  if (!instance.has_features()) throw InvalidInstance("linear coverage needs a feature map");
  if (!(ridge >= 0.0)) throw PreconditionError("ridge must be nonnegative");
  const int d = instance.feature_dim();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
  for (int x = 0; x < instance.num_contexts(); ++x) {
    const double w = instance.context_weight(x);
    if (w == 0.0) continue;
    const Eigen::MatrixXd& phi = instance.features(x);
    sigma += w * phi.transpose() * mu.probs().row(x).asDiagonal() * phi;
  }
  sigma += ridge * Eigen::MatrixXd::Identity(d, d);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  const double bottom = eig.eigenvalues().minCoeff();
  if (!(bottom > top * 1e-12) || !(bottom > 0.0)) {
    throw SingularCovariance("feature second moment under mu is singular (min eigenvalue " + std::to_string(bottom) +
                             "); use ridge > 0");
  }

  double value = 0.0;
  if (method == SolveMethod::kExplicitInverse) {
    const Eigen::MatrixXd inv = sigma.inverse();
    for (int x = 0; x < instance.num_contexts(); ++x) {
      const Eigen::MatrixXd& phi = instance.features(x);
      for (int y = 0; y < instance.num_responses(); ++y) {
        const double p = target.prob(x, y);
        if (p == 0.0) continue;
        value += instance.context_weight(x) * p * phi.row(y) * inv * phi.row(y).transpose();
      }
    }
    return value;
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw SingularCovariance("Cholesky factorization failed; use ridge > 0");
  for (int x = 0; x < instance.num_contexts(); ++x) {
    const Eigen::MatrixXd& phi = instance.features(x);
    const Eigen::MatrixXd solved = llt.solve(phi.transpose());  // d x |Y|
    for (int y = 0; y < instance.num_responses(); ++y) {
      const double p = target.prob(x, y);
      if (p == 0.0) continue;
      value += instance.context_weight(x) * p * phi.row(y).dot(solved.col(y));
    }
  }
  return value;
}

CoverageReport coverage_report(const BanditInstance& instance, const Policy& ref, std::span<const double> epsilons,
                               const Policy* fa_target, double ridge) {
  CoverageReport report;
  report.c_glo = global_coverage(instance, ref);
  report.uncovered_pairs = uncovered_pairs(instance, ref);
  report.kl_ball_upper_bound = instance.num_contexts() > 1 && !instance.has_uniform_context_weights();
  for (double eps : epsilons) report.c_kl_ball.emplace_back(eps, ExtendedReal(kl_ball_coverage(instance, ref, eps)));
  if (fa_target != nullptr && instance.has_features()) {
    report.linear_fa_coverage = linear_fa_coverage(instance, ref, *fa_target, ridge);
  }
  return report;
}

}  // namespace preflab
