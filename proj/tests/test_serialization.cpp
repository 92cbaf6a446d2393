#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "preflab/serialization.hpp"

using namespace preflab;

TEST(ExtendedJson, InfinitiesAsStrings) {
  EXPECT_EQ(to_json(ExtendedReal::pos_inf()), "inf");
  EXPECT_EQ(to_json(ExtendedReal::neg_inf()), "-inf");
  EXPECT_EQ(to_json(ExtendedReal(0.25)), 0.25);
  EXPECT_TRUE(extended_from_json(nlohmann::json("inf")).is_pos_inf());
  EXPECT_EQ(extended_from_json(nlohmann::json(-3.5)).value(), -3.5);
  EXPECT_THROW(extended_from_json(nlohmann::json("nan")), std::invalid_argument);
  EXPECT_THROW(extended_from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST(TraceCsv, RoundTripKeepsEmptyCells) {
  TrainingTrace t;
  TraceRecord a;
  a.iteration = 0;
  a.loss = -0.6931471805599453;
  a.reverse_kl = ExtendedReal(0.0);
  a.forward_kl = ExtendedReal::pos_inf();
  TraceRecord b;
  b.iteration = 10;
  b.loss = 0.1 + 0.2;
  b.logp_best = ExtendedReal::neg_inf();
  b.mean_prob_ood = ExtendedReal(1e-300);
  t.records = {a, b};
  std::ostringstream os;
  write_trace_csv(os, t);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kTraceCsvHeader);
  EXPECT_NE(text.find("0,-0.6931471805599453,0,inf,,,,"), std::string::npos);
  std::istringstream is(text);
  EXPECT_EQ(read_trace_csv(is), t);
}

TEST(TraceCsv, RejectsWrongHeader) {
  std::istringstream is("iter,loss\n0,1\n");
  EXPECT_THROW(read_trace_csv(is), std::invalid_argument);
}

TEST(TraceJson, HasRecords) {
  TrainingTrace t;
  TraceRecord r;
  r.iteration = 3;
  r.reverse_kl = ExtendedReal::pos_inf();
  t.records = {r};
  const auto j = trace_to_json(t);
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j[0]["iter"], 3);
  EXPECT_EQ(j[0]["reverse_kl"], "inf");
}

TEST(DatasetCsv, RoundTrip) {
  const auto inst = BanditInstance::promptless(5);
  const auto ds = generate_dataset(inst, Policy::uniform(inst), testing_helpers::reward({1, 2, 3, 4, 5}), 200, 3);
  std::ostringstream os;
  write_dataset_csv(os, ds);
  EXPECT_EQ(os.str().substr(0, 14), "x,y_pos,y_neg\n");
  const auto meta_text = sampler_meta_to_json(ds.meta).dump();
  const SamplerMeta meta = sampler_meta_from_json(nlohmann::json::parse(meta_text));
  std::istringstream is(os.str());
  const auto back = read_dataset_csv(is, meta);
  EXPECT_EQ(back.triples, ds.triples);
  EXPECT_EQ(back.meta.seed, 3u);
  EXPECT_EQ(back.meta.n, 200);
  EXPECT_EQ(back.meta.mu_support, ds.meta.mu_support);
}

TEST(DatasetCsv, SidecarKeys) {
  SamplerMeta m;
  m.context_dist = Eigen::VectorXd::Ones(1);
  m.mu_support = {{0, 1}};
  m.seed = 9;
  m.n = 2;
  const auto j = sampler_meta_to_json(m);
  for (const char* key : {"context_dist", "mu_support", "seed", "n"}) EXPECT_TRUE(j.contains(key)) << key;
  auto extra = j;
  extra["colour"] = 1;
  EXPECT_THROW(sampler_meta_from_json(extra), std::invalid_argument);
}

TEST(DatasetCsv, SymbolicTokens) {
  SamplerMeta m;
  m.context_dist = Eigen::VectorXd::Ones(1);
  m.mu_support = {{0, 1, 2}};
  m.n = 2;
  std::istringstream is("x,y_pos,y_neg\nq,b,a\nq,c,b\n");
  const auto ds = read_dataset_csv(is, m, [](const std::string& tok, bool is_context) {
    return is_context ? 0 : static_cast<int>(tok[0] - 'a');
  });
  ASSERT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.triples[0], (PreferenceTriple{0, 1, 0}));
  EXPECT_EQ(ds.triples[1], (PreferenceTriple{0, 2, 1}));
}

TEST(CoverageJson, Layout) {
  CoverageReport r;
  r.c_glo = ExtendedReal::pos_inf();
  r.c_kl_ball = {{0.1, ExtendedReal(1.5)}};
  r.uncovered_pairs = {{0, 2}};
  const auto j = coverage_to_json(r);
  EXPECT_EQ(j["c_glo"], "inf");
  EXPECT_EQ(j["c_kl_ball"][0][0], 0.1);
  EXPECT_EQ(j["c_kl_ball"][0][1], 1.5);
  EXPECT_TRUE(j["linear_fa_coverage"].is_null());
  EXPECT_EQ(j["uncovered_pairs"][0][1], 2);
}

TEST(MetricsJson, RoundTrip) {
  const Metrics m{{"a", ExtendedReal(0.1)}, {"b", ExtendedReal::pos_inf()}, {"c", ExtendedReal::neg_inf()}};
  const auto j = nlohmann::json::parse(metrics_to_json(m).dump());
  EXPECT_EQ(metrics_from_json(j), m);
}
