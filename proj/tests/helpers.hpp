#pragma once

#include <Eigen/Dense>
#include <vector>

#include "oracles.hpp"
#include "preflab/bandit.hpp"

namespace testing_helpers {

inline Eigen::MatrixXd row(const std::vector<double>& v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

inline std::vector<double> vec(const Eigen::MatrixXd& m, int r = 0) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

inline std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline preflab::Policy tabular(const std::vector<double>& probs) { return preflab::Policy::tabular(row(probs)); }

inline preflab::RewardModel reward(const std::vector<double>& r) { return preflab::RewardModel::tabular(row(r)); }

/// Random full-support promptless instance pieces.
struct RandomBandit {
  std::vector<double> ref;
  std::vector<double> r;
};

inline RandomBandit random_bandit(oracle::TestRng& rng, int k, double r_bound) {
  RandomBandit b;
  b.ref = rng.simplex(k);
  for (auto& p : b.ref) p = 0.5 * p + 0.5 / k;  // keep mass away from zero
  b.r.resize(static_cast<std::size_t>(k));
  for (auto& x : b.r) x = rng.uniform(-r_bound, r_bound);
  return b;
}

}  // namespace testing_helpers
