#include "preflab/serialization.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace preflab {

namespace {

std::string cell(const std::optional<ExtendedReal>& v) { return v ? v->to_string() : std::string(); }
std::string cell(const std::optional<double>& v) { return v ? ExtendedReal(*v).to_string() : std::string(); }

std::optional<ExtendedReal> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return ExtendedReal::parse(s);
}

int parse_int(const std::string& s) {
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

}  // namespace

nlohmann::json to_json(const ExtendedReal& v) {
  if (v.is_finite()) return v.value();
  return v.to_string();
}

ExtendedReal extended_from_json(const nlohmann::json& j) {
  if (j.is_number()) return ExtendedReal(j.get<double>());
  if (j.is_string()) return ExtendedReal::parse(j.get<std::string>());
  throw std::invalid_argument("expected a number or \"inf\"/\"-inf\"");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << cell(r.loss) << ',' << cell(r.reverse_kl) << ',' << cell(r.forward_kl) << ','
        << cell(r.regret) << ',' << cell(r.mean_logp_preferred) << ',' << cell(r.logp_best) << ','
        << cell(r.mean_prob_ood) << '\n';
  }
}

TrainingTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw std::invalid_argument("unexpected trace CSV header: " + line);
  TrainingTrace trace;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::invalid_argument("trace CSV row needs 8 fields: " + line);
    TraceRecord r;
    r.iteration = parse_int(f[0]);
    if (auto loss = parse_cell(f[1])) r.loss = loss->value();
    r.reverse_kl = parse_cell(f[2]);
    r.forward_kl = parse_cell(f[3]);
    r.regret = parse_cell(f[4]);
    r.mean_logp_preferred = parse_cell(f[5]);
    r.logp_best = parse_cell(f[6]);
    r.mean_prob_ood = parse_cell(f[7]);
    trace.records.push_back(r);
  }
  return trace;
}

nlohmann::json trace_to_json(const TrainingTrace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.records) {
    nlohmann::json row;
    row["iter"] = r.iteration;
    const auto put = [&](const char* key, const std::optional<ExtendedReal>& v) {
      row[key] = v ? to_json(*v) : nlohmann::json(nullptr);
    };
    put("loss", r.loss ? std::optional<ExtendedReal>(ExtendedReal(*r.loss)) : std::nullopt);
    put("reverse_kl", r.reverse_kl);
    put("forward_kl", r.forward_kl);
    put("regret", r.regret);
    put("mean_logp_preferred", r.mean_logp_preferred);
    put("logp_best", r.logp_best);
    put("mean_prob_ood", r.mean_prob_ood);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_dataset_csv(std::ostream& out, const PreferenceDataset& dataset) {
  out << kDatasetCsvHeader << '\n';
  for (const auto& t : dataset.triples) out << t.context << ',' << t.preferred << ',' << t.rejected << '\n';
}

nlohmann::json sampler_meta_to_json(const SamplerMeta& meta) {
  nlohmann::json j;
  j["context_dist"] = std::vector<double>(meta.context_dist.data(), meta.context_dist.data() + meta.context_dist.size());
  j["mu_support"] = meta.mu_support;
  j["seed"] = meta.seed;
  j["n"] = meta.n;
  return j;
}

SamplerMeta sampler_meta_from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "context_dist" && key != "mu_support" && key != "seed" && key != "n") {
      throw std::invalid_argument("unknown sampler metadata key: " + key);
    }
  }
  SamplerMeta meta;
  const auto dist = j.at("context_dist").get<std::vector<double>>();
  meta.context_dist = Eigen::Map<const Eigen::VectorXd>(dist.data(), static_cast<Eigen::Index>(dist.size()));
  meta.mu_support = j.at("mu_support").get<std::vector<std::vector<int>>>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.n = j.at("n").get<int>();
  return meta;
}

PreferenceDataset read_dataset_csv(std::istream& in, const SamplerMeta& meta, const TokenResolver& resolve) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetCsvHeader) throw std::invalid_argument("unexpected dataset CSV header: " + line);
  PreferenceDataset data;
  data.meta = meta;
  const auto index = [&](const std::string& s, bool is_context) {
    return resolve ? resolve(s, is_context) : parse_int(s);
  };
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw std::invalid_argument("dataset CSV row needs 3 fields: " + line);
    data.triples.push_back({index(f[0], true), index(f[1], false), index(f[2], false)});
  }
  return data;
}

nlohmann::json coverage_to_json(const CoverageReport& report) {
  nlohmann::json j;
  j["c_glo"] = to_json(report.c_glo);
  nlohmann::json balls = nlohmann::json::array();
  for (const auto& [eps, value] : report.c_kl_ball) balls.push_back({eps, to_json(value)});
  j["c_kl_ball"] = balls;
  j["linear_fa_coverage"] = report.linear_fa_coverage ? nlohmann::json(*report.linear_fa_coverage) : nullptr;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [x, y] : report.uncovered_pairs) pairs.push_back({x, y});
  j["uncovered_pairs"] = pairs;
  j["kl_ball_upper_bound"] = report.kl_ball_upper_bound;
  return j;
}

nlohmann::json metrics_to_json(const Metrics& metrics) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : metrics) j[key] = to_json(value);
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("metrics must be a JSON object");
  Metrics m;
  for (const auto& [key, value] : j.items()) m.emplace(key, extended_from_json(value));
  return m;
}

nlohmann::json scenario_metrics_json(const ScenarioResult& result) {
  nlohmann::json j;
  j["scenario"] = result.name;
  j["summary"] = result.summary;
  j["metrics"] = metrics_to_json(result.metrics);
  return j;
}

nlohmann::json scenario_verdict_json(const ScenarioResult& result) {
  nlohmann::json j;
  j["scenario"] = result.name;
  j["pass"] = result.verdict.pass();
  j["checks"] = result.verdict.checks;
  return j;
}

void write_scenario_artifacts(const std::filesystem::path& dir, const ScenarioResult& result, TraceFormat format) {
  for (const auto& [label, trace] : result.traces) {
    if (format == TraceFormat::kCsv) {
      std::ostringstream os;
      write_trace_csv(os, trace);
      write_text_file(dir / ("trace_" + label + ".csv"), os.str());
    } else {
      write_text_file(dir / ("trace_" + label + ".json"), trace_to_json(trace).dump(2) + "\n");
    }
  }
  write_text_file(dir / "metrics.json", scenario_metrics_json(result).dump(2) + "\n");
  write_text_file(dir / "verdict.json", scenario_verdict_json(result).dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace preflab
