#include "preflab/preference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "preflab/errors.hpp"

namespace preflab {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double bt_probability(const BanditInstance& instance, const RewardModel& reward, int x, int y1, int y2) {
  return sigmoid(reward.value(instance, x, y1) - reward.value(instance, x, y2));
}

PreferenceDataset generate_dataset(const BanditInstance& instance, const Policy& mu, const RewardModel& true_reward,
                                   int n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("dataset size must be at least 1");
  if (mu.num_contexts() != instance.num_contexts() || mu.num_responses() != instance.num_responses()) {
    throw InvalidInstance("mu shape does not match the instance");
  }

  PreferenceDataset data;
  data.meta.context_dist = instance.context_weights();
  data.meta.seed = seed;
  data.meta.n = n;
  data.meta.mu_support.resize(static_cast<std::size_t>(instance.num_contexts()));
  for (int x = 0; x < instance.num_contexts(); ++x) {
    auto& support = data.meta.mu_support[static_cast<std::size_t>(x)];
    for (int y = 0; y < instance.num_responses(); ++y) {
      if (mu.prob(x, y) > kSupportTol) support.push_back(y);
    }
    if (instance.context_weight(x) > 0.0 && support.size() < 2) {
      throw InvalidDistribution("mu emits fewer than two responses in context " + std::to_string(x) +
                                "; distinct pairs cannot be drawn");
    }
  }

  Rng context_rng(seed, Stream::kContexts);
  Rng pair_rng(seed, Stream::kPairs);
  Rng label_rng(seed, Stream::kLabels);
  const Eigen::VectorXd& rho = instance.context_weights();
  const std::span<const double> rho_span(rho.data(), static_cast<std::size_t>(rho.size()));

  data.triples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int x = instance.num_contexts() == 1 ? 0 : context_rng.categorical(rho_span);
    int y1 = mu.sample(x, pair_rng);
    int y2 = mu.sample(x, pair_rng);
    while (y1 == y2) {
      y1 = mu.sample(x, pair_rng);
      y2 = mu.sample(x, pair_rng);
    }
    const double p = bt_probability(instance, true_reward, x, y1, y2);
    if (label_rng.uniform() < p) {
      data.triples.push_back({x, y1, y2});
    } else {
      data.triples.push_back({x, y2, y1});
    }
  }
  return data;
}

Policy restrict_support(const Policy& policy, std::span<const int> allowed) {
  if (allowed.empty()) throw PreconditionError("allowed response set is empty");
  std::vector<char> keep(static_cast<std::size_t>(policy.num_responses()), 0);
  for (int y : allowed) {
    if (y < 0 || y >= policy.num_responses()) throw std::out_of_range("allowed response out of range");
    keep[static_cast<std::size_t>(y)] = 1;
  }
  Eigen::MatrixXd probs = policy.probs();
  for (int x = 0; x < policy.num_contexts(); ++x) {
    for (int y = 0; y < policy.num_responses(); ++y) {
      if (!keep[static_cast<std::size_t>(y)]) probs(x, y) = 0.0;
    }
    const double mass = probs.row(x).sum();
    if (!(mass > 0.0)) {
      throw PreconditionError("allowed set misses the support of context " + std::to_string(x));
    }
    probs.row(x) /= mass;
  }
  return Policy::tabular(std::move(probs));
}

void validate_dataset(const BanditInstance& instance, const PreferenceDataset& dataset) {
  if (dataset.meta.n != dataset.size()) throw InvalidDistribution("sampler metadata n does not match triple count");
  std::vector<std::set<int>> support;
  for (const auto& s : dataset.meta.mu_support) support.emplace_back(s.begin(), s.end());
  for (int i = 0; i < dataset.size(); ++i) {
    const auto& t = dataset.triples[static_cast<std::size_t>(i)];
    instance.check_context(t.context);
    instance.check_response(t.preferred);
    instance.check_response(t.rejected);
    if (t.preferred == t.rejected) {
      throw SupportError("triple " + std::to_string(i) + " compares a response with itself", i);
    }
    if (!support.empty()) {
      const auto& s = support.at(static_cast<std::size_t>(t.context));
      if (!s.contains(t.preferred) || !s.contains(t.rejected)) {
        throw SupportError("triple " + std::to_string(i) + " lies outside the recorded mu support", i);
      }
    }
  }
}

std::map<PairKey, PairTally> tally_pairs(const PreferenceDataset& dataset) {
  std::map<PairKey, PairTally> out;
  for (const auto& t : dataset.triples) {
    const int a = std::min(t.preferred, t.rejected);
    const int b = std::max(t.preferred, t.rejected);
    auto& tally = out[{t.context, a, b}];
    ++tally.count;
    if (t.preferred == a) ++tally.first_wins;
  }
  return out;
}

}  // namespace preflab
