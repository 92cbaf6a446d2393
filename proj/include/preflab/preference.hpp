#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "preflab/bandit.hpp"

namespace preflab {

struct PreferenceTriple {
  int context = 0;
  int preferred = 0;
  int rejected = 0;

  friend bool operator==(const PreferenceTriple&, const PreferenceTriple&) = default;
};

/// How a dataset was drawn: contexts from context_dist, responses from mu.
struct SamplerMeta {
  Eigen::VectorXd context_dist;
  /// Per context, the responses mu can emit.
  std::vector<std::vector<int>> mu_support;
  std::uint64_t seed = 0;
  int n = 0;
};

struct PreferenceDataset {
  std::vector<PreferenceTriple> triples;
  SamplerMeta meta;

  int size() const { return static_cast<int>(triples.size()); }
};

/// Bradley-Terry probability that y1 is preferred to y2 in context x,
/// sigma(r(x,y1) - r(x,y2)) evaluated in log space.
double bt_probability(const BanditInstance& instance, const RewardModel& reward, int x, int y1, int y2);

/// Logistic function, stable for large |z|.
double sigmoid(double z);
/// log(sigmoid(z)), stable for large |z|.
double log_sigmoid(double z);

/// Draws n triples: x ~ context weights, (y1, y2) ~ mu x mu redrawn until
/// y1 != y2, then y1 is labelled preferred with probability bt_probability.
/// Contexts, pairs and labels use separate streams of `seed`, so a longer
/// dataset extends a shorter one with the same seed.
PreferenceDataset generate_dataset(const BanditInstance& instance, const Policy& mu, const RewardModel& true_reward,
                                   int n, std::uint64_t seed);

/// Zeroes mass outside `allowed` and renormalizes each row.
Policy restrict_support(const Policy& policy, std::span<const int> allowed);

/// Throws if a triple is malformed or lies outside the recorded sampler support.
void validate_dataset(const BanditInstance& instance, const PreferenceDataset& dataset);

/// Per unordered pair (x, a < b): number of comparisons and wins of a.
struct PairTally {
  int count = 0;
  int first_wins = 0;
};
using PairKey = std::tuple<int, int, int>;
std::map<PairKey, PairTally> tally_pairs(const PreferenceDataset& dataset);

}  // namespace preflab
