#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "oracles.hpp"
#include "preflab/errors.hpp"
#include "preflab/preference.hpp"

using namespace preflab;
using testing_helpers::reward;
using testing_helpers::tabular;

TEST(BradleyTerry, Examples) {
  const auto inst = BanditInstance::promptless(2);
  EXPECT_DOUBLE_EQ(bt_probability(inst, reward({0.3, 0.3}), 0, 0, 1), 0.5);
  EXPECT_NEAR(bt_probability(inst, reward({std::log(3.0), 0.0}), 0, 0, 1), 0.75, 1e-15);
}

TEST(BradleyTerry, Antisymmetric) {
  oracle::TestRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + trial % 8;
    std::vector<double> r(static_cast<std::size_t>(k));
    for (auto& v : r) v = rng.uniform(-15.0, 15.0);
    const auto inst = BanditInstance::promptless(k);
    const auto model = reward(r);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double p = bt_probability(inst, model, 0, a, b);
        ASSERT_GT(p, 0.0);
        ASSERT_LT(p, 1.0);
        ASSERT_NEAR(p + bt_probability(inst, model, 0, b, a), 1.0, 1e-15);
        ASSERT_NEAR(p, oracle::sigmoid(r[a] - r[b]), 1e-14);
      }
    }
  }
}

TEST(BradleyTerry, ExtremeGapsStayInUnitInterval) {
  const auto inst = BanditInstance::promptless(2);
  EXPECT_GT(bt_probability(inst, reward({-700.0, 0.0}), 0, 0, 1), 0.0);
  EXPECT_NEAR(bt_probability(inst, reward({-700.0, 0.0}), 0, 0, 1), std::exp(-700.0), 1e-310);
  EXPECT_LT(bt_probability(inst, reward({30.0, 0.0}), 0, 0, 1), 1.0);
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-12);
}

TEST(GenerateDataset, LargeGapFrequencyInBinomialBand) {
  const auto inst = BanditInstance::promptless(2);
  const int n = 10000;
  const auto ds = generate_dataset(inst, tabular({0.5, 0.5}), reward({10.0, 0.0}), n, 1);
  ASSERT_EQ(ds.size(), n);
  int first = 0;
  for (const auto& t : ds.triples) first += t.preferred == 0;
  const double p = oracle::sigmoid(10.0);
  const double rate = first / static_cast<double>(n);
  EXPECT_GE(rate, 0.999 * p - oracle::binomial_band(p, n));
  EXPECT_LE(rate, p + oracle::binomial_band(p, n) + 1.0 / n);
}

TEST(GenerateDataset, RespectsMuSupport) {
  const auto inst = BanditInstance::promptless(100);
  std::vector<int> first_half(50);
  std::iota(first_half.begin(), first_half.end(), 0);
  const Policy mu = restrict_support(Policy::uniform(inst), first_half);
  oracle::TestRng rng(9);
  std::vector<double> r(100);
  for (auto& v : r) v = rng.uniform(-1.0, 1.0);
  const auto ds = generate_dataset(inst, mu, reward(r), 5000, 4);
  for (const auto& t : ds.triples) {
    ASSERT_LT(t.preferred, 50);
    ASSERT_LT(t.rejected, 50);
    ASSERT_NE(t.preferred, t.rejected);
  }
  ASSERT_EQ(ds.meta.mu_support.size(), 1u);
  EXPECT_EQ(ds.meta.mu_support[0], first_half);
  EXPECT_EQ(ds.meta.n, 5000);
  EXPECT_EQ(ds.meta.seed, 4u);
  EXPECT_NO_THROW(validate_dataset(inst, ds));
}

TEST(GenerateDataset, EqualRewardsGiveFairCoins) {
  const auto inst = BanditInstance::promptless(4);
  const int n = 10000;
  const auto ds = generate_dataset(inst, Policy::uniform(inst), reward({1.0, 1.0, 1.0, 1.0}), n, 12);
  const auto tallies = tally_pairs(ds);
  EXPECT_EQ(tallies.size(), 6u);
  for (const auto& [key, tally] : tallies) {
    ASSERT_GE(tally.count, 200);
    EXPECT_NEAR(tally.first_wins / static_cast<double>(tally.count), 0.5, oracle::binomial_band(0.5, tally.count));
  }
}

TEST(GenerateDataset, PairRatesMatchBtOnRandomInstance) {
  oracle::TestRng rng(41);
  const int k = 5;
  std::vector<double> r(k);
  for (auto& v : r) v = rng.uniform(-2.0, 2.0);
  const auto inst = BanditInstance::promptless(k);
  const int n = 10000;
  const auto ds = generate_dataset(inst, Policy::uniform(inst), reward(r), n, 5);
  for (const auto& [key, tally] : tally_pairs(ds)) {
    const auto [x, a, b] = key;
    ASSERT_EQ(x, 0);
    ASSERT_LT(a, b);
    const double p = oracle::sigmoid(r[a] - r[b]);
    EXPECT_NEAR(tally.first_wins / static_cast<double>(tally.count), p, oracle::binomial_band(p, tally.count));
  }
}

TEST(GenerateDataset, MultiContextFrequencies) {
  const BanditInstance inst(Eigen::Vector2d(0.2, 0.8), 3);
  const int n = 20000;
  const auto ds = generate_dataset(inst, Policy::uniform(inst), RewardModel::tabular(Eigen::MatrixXd::Zero(2, 3)), n, 2);
  int in_first = 0;
  for (const auto& t : ds.triples) in_first += t.context == 0;
  EXPECT_NEAR(in_first / static_cast<double>(n), 0.2, oracle::binomial_band(0.2, n));
}

TEST(GenerateDataset, DeterministicAndExtends) {
  const auto inst = BanditInstance::promptless(6);
  const Policy mu = Policy::uniform(inst);
  const auto r = reward({0.1, -0.4, 0.9, 0.0, 2.0, -1.0});
  const auto a = generate_dataset(inst, mu, r, 500, 77);
  const auto b = generate_dataset(inst, mu, r, 500, 77);
  const auto longer = generate_dataset(inst, mu, r, 900, 77);
  const auto other = generate_dataset(inst, mu, r, 500, 78);
  EXPECT_EQ(a.triples, b.triples);
  EXPECT_TRUE(std::equal(a.triples.begin(), a.triples.end(), longer.triples.begin()));
  EXPECT_NE(a.triples, other.triples);
}

TEST(GenerateDataset, SingleSupportMuRejected) {
  const auto inst = BanditInstance::promptless(3);
  EXPECT_THROW(generate_dataset(inst, tabular({0.0, 1.0, 0.0}), reward({0, 0, 0}), 10, 0), InvalidDistribution);
  EXPECT_THROW(generate_dataset(inst, Policy::uniform(inst), reward({0, 0, 0}), 0, 0), PreconditionError);
}

TEST(RestrictSupport, Examples) {
  const auto inst3 = BanditInstance::promptless(3);
  const std::vector<int> two{0, 1};
  const Policy p = restrict_support(Policy::uniform(inst3), two);
  EXPECT_DOUBLE_EQ(p.prob(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p.prob(0, 1), 0.5);
  EXPECT_EQ(p.prob(0, 2), 0.0);

  const Policy q = tabular({0.2, 0.3, 0.5});
  const std::vector<int> all{0, 1, 2};
  EXPECT_TRUE(restrict_support(q, all).probs().isApprox(q.probs(), 1e-15));

  const auto inst500 = BanditInstance::promptless(500);
  std::vector<int> half(250);
  std::iota(half.begin(), half.end(), 0);
  const Policy h = restrict_support(Policy::uniform(inst500), half);
  for (int y = 0; y < 250; ++y) ASSERT_NEAR(h.prob(0, y), 1.0 / 250, 1e-15);
  for (int y = 250; y < 500; ++y) ASSERT_EQ(h.prob(0, y), 0.0);
}

TEST(RestrictSupport, Errors) {
  const Policy q = tabular({0.5, 0.5, 0.0});
  EXPECT_THROW(restrict_support(q, std::vector<int>{}), PreconditionError);
  EXPECT_THROW(restrict_support(q, std::vector<int>{2}), PreconditionError);
  EXPECT_THROW(restrict_support(q, std::vector<int>{5}), std::out_of_range);
}

TEST(ValidateDataset, NamesOffendingTriple) {
  const auto inst = BanditInstance::promptless(4);
  auto ds = generate_dataset(inst, restrict_support(Policy::uniform(inst), std::vector<int>{0, 1, 2}),
                             reward({0, 1, 2, 3}), 20, 0);
  ds.triples[7] = {0, 3, 1};
  try {
    validate_dataset(inst, ds);
    FAIL() << "expected SupportError";
  } catch (const SupportError& e) {
    EXPECT_EQ(e.triple_index(), 7);
  }
  ds.triples[7] = {0, 1, 1};
  EXPECT_THROW(validate_dataset(inst, ds), SupportError);
}
