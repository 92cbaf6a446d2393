#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "preflab/bandit.hpp"

namespace preflab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// A bandit problem as stored in instance.json.
///
///   context_weights      [w_x]            optional, default [1]
///   num_responses        K                needed when neither ref nor features fix it
///   features             [x][y][d]        optional
///   ref                  [x][y]           tabular reference policy, default uniform
///   ref_weights          [d]              softmax-linear reference (needs features)
///   mu                   [x][y]           data distribution, default ref
///   true_reward          [x][y]           tabular reward
///   true_reward_weights  [d]              linear reward (needs features)
///   responses, contexts  [names]          optional symbol tables
struct Problem {
  BanditInstance instance;
  Policy ref;
  Policy mu;
  std::optional<RewardModel> true_reward;
  std::vector<std::string> response_names;
  std::vector<std::string> context_names;
};

Problem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Problem& p);

/// Index of `token` in the symbol table, or the token parsed as an integer.
int resolve_symbol(const std::vector<std::string>& names, const std::string& token);

/// Entry point shared by the executable and the tests; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace preflab::cli
