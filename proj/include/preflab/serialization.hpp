#pragma once

// File formats:
//   dataset CSV      header `x,y_pos,y_neg`, one triple per line
//   dataset sidecar  JSON {context_dist, mu_support, seed, n}
//   trace CSV        header `iter,loss,reverse_kl,forward_kl,regret,
//                    mean_logp_preferred,logp_best,mean_prob_ood`; empty cell = untracked
//   coverage JSON    {c_glo, c_kl_ball: [[eps, value], ...], linear_fa_coverage, uncovered_pairs}
// Infinite values are written as "inf" / "-inf" (strings in JSON).

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "preflab/coverage.hpp"
#include "preflab/learners.hpp"
#include "preflab/preference.hpp"
#include "preflab/scenarios.hpp"

namespace preflab {

inline constexpr const char* kDatasetCsvHeader = "x,y_pos,y_neg";
inline constexpr const char* kTraceCsvHeader =
    "iter,loss,reverse_kl,forward_kl,regret,mean_logp_preferred,logp_best,mean_prob_ood";

nlohmann::json to_json(const ExtendedReal& v);
ExtendedReal extended_from_json(const nlohmann::json& j);

void write_trace_csv(std::ostream& out, const TrainingTrace& trace);
TrainingTrace read_trace_csv(std::istream& in);
nlohmann::json trace_to_json(const TrainingTrace& trace);

void write_dataset_csv(std::ostream& out, const PreferenceDataset& dataset);
nlohmann::json sampler_meta_to_json(const SamplerMeta& meta);
SamplerMeta sampler_meta_from_json(const nlohmann::json& j);

/// Maps a CSV cell to an index; `is_context` tells which symbol space.
using TokenResolver = std::function<int(const std::string& token, bool is_context)>;
/// Reads triples; cells are integers unless a resolver is given.
PreferenceDataset read_dataset_csv(std::istream& in, const SamplerMeta& meta, const TokenResolver& resolve = {});

nlohmann::json coverage_to_json(const CoverageReport& report);

enum class TraceFormat { kCsv, kJson };

nlohmann::json metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& j);

/// metrics.json: {scenario, summary, metrics}; verdict.json: {scenario, pass, checks}.
nlohmann::json scenario_metrics_json(const ScenarioResult& result);
nlohmann::json scenario_verdict_json(const ScenarioResult& result);
/// Writes trace_<label>.{csv,json}, metrics.json and verdict.json into `dir`.
void write_scenario_artifacts(const std::filesystem::path& dir, const ScenarioResult& result, TraceFormat format);

/// Splits one CSV line on commas, trimming surrounding whitespace and CR.
std::vector<std::string> split_csv_line(const std::string& line);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace preflab
