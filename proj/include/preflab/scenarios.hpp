#pragma once

// Fixed constructions that exercise the learners and coverage notions end to
// end. Each scenario returns numeric metrics plus a verdict computed from those
// metrics alone, so a saved metrics file can be re-judged.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "preflab/extended_real.hpp"
#include "preflab/learners.hpp"

namespace preflab {

using Metrics = std::map<std::string, ExtendedReal>;

struct Verdict {
  std::map<std::string, bool> checks;

  bool pass() const;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct ScenarioResult {
  std::string name;
  std::map<std::string, std::string> summary;
  Metrics metrics;
  /// (label, trace); written as trace_<label>.csv.
  std::vector<std::pair<std::string, TrainingTrace>> traces;
  Verdict verdict;
};

struct Prop41Params {
  double beta = 1.0;
  double eps = 0.01;
  std::pair<double, double> r_star{1.0, 0.0};
  std::pair<double, double> ref_mass{0.5, 0.5};
};

struct IpoCounterexampleParams {
  double beta = 0.1;
  double alpha = 1e-4;
  double p_star = 0.7;
};

struct ForwardKlParams {
  int n = 50;
  double beta = 1.0;
  double r_bound = 1.0;
  int num_responses = 10;
};

struct ExtrapolationFaParams {
  std::uint64_t seed = 0;
  double beta = 1.0;
  double learning_rate = 0.05;
  int iterations = 2000;
  int num_pairs = 10000;
  int subset_size = 20;
  double clip_bound = 10.0;
  int online_batch = 64;
  double reward_learning_rate = 20.0;
  int reward_iterations = 2000;
  int record_every = 10;
  int max_feature_draws = 10;
};

struct ExtrapolationTabularParams {
  std::uint64_t seed = 0;
  double beta = 1.0;
  double learning_rate = 1.0;
  int iterations = 5000;
  int num_pairs = 10000;
  int record_every = 50;
};

struct SeparationParams {
  std::uint64_t seed = 0;
  double beta = 0.1;
  double lambda = 0.1;
  double clip_bound = 1.0;
  double learning_rate = 0.5;
  int iterations = 2000;
  int num_pairs = 1000;
  int minibatch_size = 64;
  int online_batch = 16;
  int record_every = 20;
};

ScenarioResult scenario_prop41(const Prop41Params& params = {});
ScenarioResult scenario_ipo_counterexample(const IpoCounterexampleParams& params = {});
ScenarioResult scenario_forward_kl(const ForwardKlParams& params = {});
ScenarioResult scenario_extrapolation_fa(const ExtrapolationFaParams& params = {});
ScenarioResult scenario_extrapolation_tabular(const ExtrapolationTabularParams& params = {});
ScenarioResult scenario_separation(const SeparationParams& params = {});

Verdict judge_prop41(const Metrics& m);
Verdict judge_ipo_counterexample(const Metrics& m);
Verdict judge_forward_kl(const Metrics& m);
Verdict judge_extrapolation_fa(const Metrics& m);
Verdict judge_extrapolation_tabular(const Metrics& m);
Verdict judge_separation(const Metrics& m);

/// Dispatches on scenario name; throws std::invalid_argument for unknown names.
Verdict judge(const std::string& scenario, const Metrics& m);

const std::vector<std::string>& scenario_names();

/// Generic overrides, mapped onto each scenario's parameters where they apply.
struct ScenarioOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<double> eps;
  std::optional<double> alpha;
  std::optional<double> p_star;
  std::optional<double> lambda;
  std::optional<double> r_bound;
  std::optional<double> clip;
  std::optional<double> learning_rate;
  std::optional<int> n;
  std::optional<int> iterations;
};

/// Runs a scenario by name; throws std::invalid_argument for unknown names.
ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& options = {});

}  // namespace preflab
