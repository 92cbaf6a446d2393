#include "cli_commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "preflab/coverage.hpp"
#include "preflab/errors.hpp"
#include "preflab/learners.hpp"
#include "preflab/preference.hpp"
#include "preflab/scenarios.hpp"
#include "preflab/serialization.hpp"

namespace preflab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad configuration or flag values; reported with exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Problem files

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidInstance(std::string(what) + " must be a non-empty array of rows");
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidInstance(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

Problem problem_from_json(const json& j) {
  static const std::set<std::string> known{"context_weights", "num_responses", "features",
                                           "ref",             "ref_weights",   "mu",
                                           "true_reward",     "true_reward_weights", "responses",
                                           "contexts"};
  if (!j.is_object()) throw InvalidInstance("instance file must hold a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw InvalidInstance("unknown instance key: " + key);
  }
  if (j.contains("ref") && j.contains("ref_weights")) throw InvalidInstance("give either ref or ref_weights");
  if (j.contains("true_reward") && j.contains("true_reward_weights")) {
    throw InvalidInstance("give either true_reward or true_reward_weights");
  }

  Eigen::VectorXd rho = j.contains("context_weights") ? vector_from_json(j.at("context_weights"))
                                                      : Eigen::VectorXd::Ones(1);
  std::optional<BanditInstance> inst;
  if (j.contains("features")) {
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& block : j.at("features")) blocks.push_back(matrix_from_json(block, "features"));
    inst.emplace(rho, std::move(blocks));
  } else {
    int k = 0;
    if (j.contains("ref")) {
      k = static_cast<int>(matrix_from_json(j.at("ref"), "ref").cols());
    } else if (j.contains("num_responses")) {
      k = j.at("num_responses").get<int>();
    } else {
      throw InvalidInstance("instance needs num_responses, ref or features");
    }
    inst.emplace(rho, k);
  }
  if (j.contains("num_responses") && j.at("num_responses").get<int>() != inst->num_responses()) {
    throw InvalidInstance("num_responses disagrees with the other fields");
  }

  Policy ref = j.contains("ref")           ? Policy::tabular(matrix_from_json(j.at("ref"), "ref"))
               : j.contains("ref_weights") ? Policy::softmax_linear(*inst, vector_from_json(j.at("ref_weights")))
                                           : Policy::uniform(*inst);
  if (ref.num_contexts() != inst->num_contexts() || ref.num_responses() != inst->num_responses()) {
    throw InvalidInstance("ref has the wrong shape");
  }
  Policy mu = j.contains("mu") ? Policy::tabular(matrix_from_json(j.at("mu"), "mu")) : ref;
  if (mu.num_contexts() != inst->num_contexts() || mu.num_responses() != inst->num_responses()) {
    throw InvalidInstance("mu has the wrong shape");
  }

  std::optional<RewardModel> reward;
  if (j.contains("true_reward")) {
    const Eigen::MatrixXd table = matrix_from_json(j.at("true_reward"), "true_reward");
    if (table.rows() != inst->num_contexts() || table.cols() != inst->num_responses()) {
      throw InvalidInstance("true_reward has the wrong shape");
    }
    reward = RewardModel::tabular(table);
  } else if (j.contains("true_reward_weights")) {
    if (!inst->has_features()) throw InvalidInstance("true_reward_weights needs features");
    reward = RewardModel::linear(vector_from_json(j.at("true_reward_weights")));
  }

  Problem p{*inst, std::move(ref), std::move(mu), std::move(reward), {}, {}};
  if (j.contains("responses")) p.response_names = j.at("responses").get<std::vector<std::string>>();
  if (j.contains("contexts")) p.context_names = j.at("contexts").get<std::vector<std::string>>();
  if (!p.response_names.empty() && static_cast<int>(p.response_names.size()) != inst->num_responses()) {
    throw InvalidInstance("responses must name every response");
  }
  if (!p.context_names.empty() && static_cast<int>(p.context_names.size()) != inst->num_contexts()) {
    throw InvalidInstance("contexts must name every context");
  }
  return p;
}

json problem_to_json(const Problem& p) {
  json j;
  j["context_weights"] = vector_to_json(p.instance.context_weights());
  j["num_responses"] = p.instance.num_responses();
  if (p.instance.has_features()) {
    json blocks = json::array();
    for (int x = 0; x < p.instance.num_contexts(); ++x) blocks.push_back(matrix_to_json(p.instance.features(x)));
    j["features"] = blocks;
  }
  if (p.ref.kind() == PolicyKind::kSoftmaxLinear) {
    j["ref_weights"] = vector_to_json(p.ref.weights());
  } else {
    j["ref"] = matrix_to_json(p.ref.probs());
  }
  j["mu"] = matrix_to_json(p.mu.probs());
  if (p.true_reward) {
    if (p.true_reward->kind() == RewardKind::kLinear) {
      j["true_reward_weights"] = vector_to_json(p.true_reward->weights());
    } else {
      j["true_reward"] = matrix_to_json(p.true_reward->table());
    }
  }
  if (!p.response_names.empty()) j["responses"] = p.response_names;
  if (!p.context_names.empty()) j["contexts"] = p.context_names;
  return j;
}

int resolve_symbol(const std::vector<std::string>& names, const std::string& token) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == token) return static_cast<int>(i);
  }
  int v = 0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size()) throw std::invalid_argument("unknown symbol: " + token);
  return v;
}

namespace {

// ---------------------------------------------------------------------------
// Options: every key can come from --config (flat JSON) or a flag; flags win.

enum class Kind { kDouble, kInt, kSeed, kString, kDoubleList };

struct OptionSpec {
  std::string key;
  Kind kind;
  json fallback;  // null: absent unless given
  std::string help;
  std::vector<std::string> choices = {};
  std::string alias = {};
};

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }
  return v;
}

json parse_flag(const OptionSpec& spec, const std::string& s) {
  switch (spec.kind) {
    case Kind::kDouble:
      return parse_double(spec.key, s);
    case Kind::kInt: {
      int v = 0;
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError(spec.key + ": expected an integer");
      return v;
    }
    case Kind::kSeed: {
      std::uint64_t v = 0;
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size()) {
        throw ConfigError(spec.key + ": expected a nonnegative integer");
      }
      return v;
    }
    case Kind::kString:
      return s;
    case Kind::kDoubleList: {
      json list = json::array();
      for (const auto& item : split_csv_line(s)) list.push_back(parse_double(spec.key, item));
      return list;
    }
  }
  return nullptr;
}

void check_value(const OptionSpec& spec, const json& v) {
  bool ok = v.is_null();
  switch (spec.kind) {
    case Kind::kDouble:
      ok = ok || v.is_number();
      break;
    case Kind::kInt:
      ok = ok || v.is_number_integer();
      break;
    case Kind::kSeed:
      ok = ok || v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
      break;
    case Kind::kString:
      ok = ok || v.is_string();
      break;
    case Kind::kDoubleList:
      ok = ok || v.is_number() ||
           (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }));
      break;
  }
  if (!ok) throw ConfigError(spec.key + ": value has the wrong type: " + v.dump());
  if (spec.kind == Kind::kString && v.is_string() && !spec.choices.empty() &&
      std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) == spec.choices.end()) {
    std::string allowed;
    for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
    throw ConfigError(spec.key + ": must be one of {" + allowed + "}");
  }
}

struct Command {
  explicit Command(CLI::App* sub) : app(sub) {}

  CLI::App* app = nullptr;
  std::vector<OptionSpec> specs;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> given;
  std::string config_path;

  void add(OptionSpec spec) {
    std::string names = flag_name(spec.key);
    if (!spec.alias.empty()) names += "," + spec.alias;
    std::string help = spec.help;
    if (!spec.fallback.is_null()) help += " (default " + spec.fallback.dump() + ")";
    given[spec.key] = app->add_option(names, raw[spec.key], help);
    specs.push_back(std::move(spec));
  }

  void add_common(const char* out_default) {
    app->add_option("--config", config_path, "flat JSON file of option values; flags override it");
    add({"seed", Kind::kSeed, 0, "random seed"});
    add({"out", Kind::kString, out_default, "output directory"});
    add({"format", Kind::kString, "csv", "trace and dataset format", {"csv", "json"}});
  }

  json resolve(const std::string& subcommand) const {
    json cfg = json::object();
    for (const auto& s : specs) cfg[s.key] = s.fallback;
    if (!config_path.empty()) {
      json file;
      try {
        file = json::parse(read_text_file(config_path));
      } catch (const json::exception& e) {
        throw ConfigError("cannot parse config " + config_path + ": " + e.what());
      } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
      }
      if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
      for (const auto& [key, value] : file.items()) {
        // A resolved-config echo names its subcommand; accept it for replay.
        if (key == "command") {
          if (value != subcommand) throw ConfigError("config was written for '" + value.dump() + "'");
          continue;
        }
        const auto it = std::find_if(specs.begin(), specs.end(), [&](const OptionSpec& s) { return s.key == key; });
        if (it == specs.end()) throw ConfigError("unknown config key for " + subcommand + ": " + key);
        check_value(*it, value);
        cfg[key] = value;
      }
    }
    for (const auto& s : specs) {
      if (given.at(s.key)->count() > 0) cfg[s.key] = parse_flag(s, raw.at(s.key));
      check_value(s, cfg[s.key]);
    }
    cfg["command"] = subcommand;
    return cfg;
  }
};

template <typename T>
std::optional<T> opt(const json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return std::nullopt;
  return cfg.at(key).get<T>();
}

template <typename T>
T req(const json& cfg, const char* key) {
  auto v = opt<T>(cfg, key);
  if (!v) throw ConfigError(std::string("missing required option: ") + key);
  return *v;
}

TraceFormat trace_format(const json& cfg) {
  return cfg.at("format").get<std::string>() == "json" ? TraceFormat::kJson : TraceFormat::kCsv;
}

void write_config_echo(const fs::path& out, const json& cfg) {
  write_text_file(out / "config.json", cfg.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// scenario

struct ScenarioOutcome {
  std::string name;
  int code = kExitOk;
  std::string message;
};

ScenarioOutcome run_one_scenario(const std::string& name, const ScenarioOptions& options, const fs::path& dir,
                                 TraceFormat format) {
  try {
    const ScenarioResult result = run_scenario(name, options);
    write_scenario_artifacts(dir, result, format);
    std::string line = name + ": " + (result.verdict.pass() ? "PASS" : "FAIL");
    for (const auto& [check, ok] : result.verdict.checks) line += " " + check + "=" + (ok ? "ok" : "FAILED");
    return {name, result.verdict.pass() ? kExitOk : kExitFailure, line};
  } catch (const std::invalid_argument& e) {
    return {name, kExitUsage, name + ": " + e.what()};
  } catch (const std::exception& e) {
    return {name, kExitFailure, name + ": error: " + e.what()};
  }
}

int cmd_scenario(const std::string& name, const json& cfg, std::ostream& out, std::ostream& err,
                 const std::string& usage) {
  const auto& known = scenario_names();
  const bool all = name == "all";
  if (!all && std::find(known.begin(), known.end(), name) == known.end()) {
    err << "unknown scenario: " << name << "\n" << usage;
    return kExitUsage;
  }
  ScenarioOptions o;
  o.seed = opt<std::uint64_t>(cfg, "seed");
  o.beta = opt<double>(cfg, "beta");
  o.eps = opt<double>(cfg, "eps");
  o.alpha = opt<double>(cfg, "alpha");
  o.p_star = opt<double>(cfg, "p_star");
  o.lambda = opt<double>(cfg, "lambda");
  o.r_bound = opt<double>(cfg, "r_bound");
  o.clip = opt<double>(cfg, "clip");
  o.learning_rate = opt<double>(cfg, "learning_rate");
  o.n = opt<int>(cfg, "n");
  o.iterations = opt<int>(cfg, "iterations");
  if (all && (o.beta || o.eps || o.alpha || o.p_star || o.lambda || o.r_bound || o.clip || o.learning_rate || o.n ||
              o.iterations)) {
    throw ConfigError("with 'all' only --seed applies");
  }
  const int jobs = cfg.at("jobs").get<int>();
  if (jobs < 1) throw ConfigError("jobs must be at least 1");

  const fs::path root = cfg.at("out").get<std::string>();
  json echo = cfg;
  echo["name"] = name;
  write_config_echo(root, echo);
  const std::vector<std::string> names = all ? known : std::vector<std::string>{name};
  const TraceFormat format = trace_format(cfg);

  std::vector<ScenarioOutcome> outcomes;
  for (std::size_t start = 0; start < names.size(); start += static_cast<std::size_t>(jobs)) {
    std::vector<std::future<ScenarioOutcome>> running;
    for (std::size_t i = start; i < std::min(names.size(), start + static_cast<std::size_t>(jobs)); ++i) {
      running.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one_scenario, names[i],
                                   o, root / names[i], format));
    }
    for (auto& f : running) outcomes.push_back(f.get());
  }

  int code = kExitOk;
  for (const auto& r : outcomes) {
    (r.code == kExitUsage ? err : out) << r.message << "\n";
    code = std::max(code, r.code);
  }
  return code;
}

// ---------------------------------------------------------------------------
// generate / train / coverage

Problem load_problem_file(const fs::path& path) {
  try {
    return problem_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("cannot read instance " + path.string() + ": " + e.what());
  }
}

Problem default_problem(int num_responses, std::uint64_t seed) {
  if (num_responses < 2) throw ConfigError("num_responses must be at least 2");
  const BanditInstance inst = BanditInstance::promptless(num_responses);
  Rng rng(seed, Stream::kInstance);
  Eigen::MatrixXd reward(1, num_responses);
  for (int y = 0; y < num_responses; ++y) reward(0, y) = rng.uniform(-1.0, 1.0);
  const Policy ref = Policy::uniform(inst);
  return Problem{inst, ref, ref, RewardModel::tabular(reward), {}, {}};
}

int cmd_generate(const json& cfg, std::ostream& out) {
  const auto instance_path = opt<std::string>(cfg, "instance");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const Problem problem =
      instance_path ? load_problem_file(*instance_path) : default_problem(cfg.at("num_responses").get<int>(), seed);
  if (!problem.true_reward) throw ConfigError("instance has no true_reward to label pairs with");
  const int n = cfg.at("n").get<int>();
  if (n < 1) throw ConfigError("n must be at least 1");

  const PreferenceDataset data = generate_dataset(problem.instance, problem.mu, *problem.true_reward, n, seed);
  const fs::path dir = cfg.at("out").get<std::string>();
  write_config_echo(dir, cfg);
  write_text_file(dir / "instance.json", problem_to_json(problem).dump(2) + "\n");
  if (trace_format(cfg) == TraceFormat::kCsv) {
    std::ostringstream os;
    write_dataset_csv(os, data);
    write_text_file(dir / "dataset.csv", os.str());
    write_text_file(dir / "dataset.meta.json", sampler_meta_to_json(data.meta).dump(2) + "\n");
  } else {
    json j;
    j["meta"] = sampler_meta_to_json(data.meta);
    json triples = json::array();
    for (const auto& t : data.triples) triples.push_back({t.context, t.preferred, t.rejected});
    j["triples"] = triples;
    write_text_file(dir / "dataset.json", j.dump(2) + "\n");
  }
  out << "generated " << data.size() << " preference triples in " << dir.string() << "\n";
  return kExitOk;
}

PreferenceDataset load_dataset(const fs::path& path, const Problem& problem) {
  const auto resolver = [&](const std::string& token, bool is_context) {
    return resolve_symbol(is_context ? problem.context_names : problem.response_names, token);
  };
  fs::path csv = path;
  fs::path js = path;
  if (fs::is_directory(path)) {
    csv = path / "dataset.csv";
    js = path / "dataset.json";
  }
  try {
    if (csv.extension() == ".csv" && fs::exists(csv)) {
      fs::path sidecar = csv;
      sidecar.replace_extension(".meta.json");
      const SamplerMeta meta = sampler_meta_from_json(json::parse(read_text_file(sidecar)));
      std::istringstream is(read_text_file(csv));
      return read_dataset_csv(is, meta, resolver);
    }
    if (js.extension() == ".json" && fs::exists(js)) {
      const json j = json::parse(read_text_file(js));
      PreferenceDataset data;
      data.meta = sampler_meta_from_json(j.at("meta"));
      for (const auto& t : j.at("triples")) {
        data.triples.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
      }
      return data;
    }
  } catch (const json::exception& e) {
    throw ConfigError("cannot read dataset " + path.string() + ": " + e.what());
  }
  throw ConfigError("no dataset found at " + path.string());
}

json policy_json(const TrainResult& r) {
  json j;
  j["probs"] = matrix_to_json(r.policy.probs());
  json params = json::array();
  for (Eigen::Index i = 0; i < r.params.size(); ++i) params.push_back(to_json(ExtendedReal(r.params(i))));
  j["params"] = params;
  return j;
}

json reward_json(const RewardModel& reward, const BanditInstance& inst) {
  json j;
  j["kind"] = reward.kind() == RewardKind::kLinear ? "linear" : "tabular";
  if (reward.kind() == RewardKind::kLinear) j["weights"] = vector_to_json(reward.weights());
  j["values"] = matrix_to_json(reward.evaluate(inst));
  j["clip_bound"] = reward.clip_bound() ? json(*reward.clip_bound()) : json(nullptr);
  return j;
}

int cmd_train(const json& cfg, std::ostream& out) {
  const fs::path data_path = req<std::string>(cfg, "data");
  fs::path instance_path;
  if (auto p = opt<std::string>(cfg, "instance")) {
    instance_path = *p;
  } else {
    instance_path = (fs::is_directory(data_path) ? data_path : data_path.parent_path()) / "instance.json";
  }
  const Problem problem = load_problem_file(instance_path);
  const PreferenceDataset data = load_dataset(data_path, problem);
  validate_dataset(problem.instance, data);

  TrainConfig tc;
  tc.learning_rate = cfg.at("learning_rate").get<double>();
  tc.iterations = cfg.at("iterations").get<int>();
  tc.minibatch_size = cfg.at("batch").get<int>();
  tc.beta = cfg.at("beta").get<double>();
  tc.lambda = cfg.at("lambda").get<double>();
  tc.online_batch = cfg.at("online_batch").get<int>();
  tc.clip_bound = opt<double>(cfg, "clip");
  tc.seed = cfg.at("seed").get<std::uint64_t>();
  tc.reward_learning_rate = cfg.at("reward_learning_rate").get<double>();
  tc.reward_iterations = cfg.at("reward_iterations").get<int>();
  tc.record_every = cfg.at("record_every").get<int>();
  tc.validate();

  const std::string algo = req<std::string>(cfg, "algo");
  if (algo != "hypo" && tc.lambda != 0.0) throw ConfigError("lambda applies only to --algo hypo");
  const bool linear = cfg.at("param").get<std::string>() == "linear";
  const PolicyModel model(problem.instance, linear ? PolicyParam::kSoftmaxLinear : PolicyParam::kTabularLogits);
  TraceSpec track;
  track.true_reward = problem.true_reward;

  TrainResult result = [&] {
    if (algo == "rlhf") {
      const RlhfMode mode = cfg.at("mode").get<std::string>() == "gradient" ? RlhfMode::kGradient : RlhfMode::kExact;
      const RewardClass rc =
          cfg.at("reward_class").get<std::string>() == "linear" ? RewardClass::kLinear : RewardClass::kTabular;
      return train_rlhf(model, data, problem.ref, tc, mode, rc, track);
    }
    if (algo == "dpo") return train_dpo(model, data, problem.ref, tc, track);
    if (algo == "ipo") return train_ipo(model, data, problem.ref, tc, track);
    return train_hypo(model, data, problem.ref, tc, track);
  }();

  const fs::path dir = cfg.at("out").get<std::string>();
  write_config_echo(dir, cfg);
  if (trace_format(cfg) == TraceFormat::kCsv) {
    std::ostringstream os;
    write_trace_csv(os, result.trace);
    write_text_file(dir / "trace.csv", os.str());
  } else {
    write_text_file(dir / "trace.json", trace_to_json(result.trace).dump(2) + "\n");
  }
  write_text_file(dir / "policy.json", policy_json(result).dump(2) + "\n");
  if (result.reward) write_text_file(dir / "reward.json", reward_json(*result.reward, problem.instance).dump(2) + "\n");

  const TraceRecord& last = result.trace.back();
  out << algo << ": " << result.trace.records.size() << " trace records, final iteration " << last.iteration;
  if (last.reverse_kl) out << ", reverse KL " << last.reverse_kl->to_string();
  if (last.regret) out << ", regret " << last.regret->to_string();
  out << "\n";
  return kExitOk;
}

int cmd_coverage(const json& cfg, std::ostream& out) {
  const auto instance_path = opt<std::string>(cfg, "instance");
  const Problem problem = instance_path ? load_problem_file(*instance_path)
                                        : default_problem(cfg.at("num_responses").get<int>(), 0);
  std::vector<double> eps;
  const json& e = cfg.at("eps");
  if (e.is_number()) {
    eps.push_back(e.get<double>());
  } else {
    eps = e.get<std::vector<double>>();
  }
  const double ridge = cfg.at("ridge").get<double>();
  CoverageReport report = coverage_report(problem.instance, problem.ref, eps);

  const std::string target = cfg.at("fa_target").get<std::string>();
  if (target != "none") {
    if (!problem.instance.has_features()) throw ConfigError("fa_target needs an instance with features");
    std::optional<Policy> comparator;
    if (target == "uniform") {
      comparator = Policy::uniform(problem.instance);
    } else {
      if (!problem.true_reward) throw ConfigError("fa_target optimal needs a true reward");
      comparator = gibbs_policy(problem.instance, problem.ref, *problem.true_reward, cfg.at("beta").get<double>());
    }
    report.linear_fa_coverage = linear_fa_coverage(problem.instance, problem.mu, *comparator, ridge);
  }

  const fs::path dir = cfg.at("out").get<std::string>();
  write_config_echo(dir, cfg);
  write_text_file(dir / "coverage.json", coverage_to_json(report).dump(2) + "\n");
  out << "c_glo " << report.c_glo.to_string() << ", uncovered pairs " << report.uncovered_pairs.size() << "\n";
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"preflab: KL-regularized preference learning on contextual bandits"};
  app.name("preflab");
  app.require_subcommand(1);

  Command scenario{app.add_subcommand("scenario", "run a named scenario (or all) and write its artifacts")};
  std::string scenario_name;
  scenario.app->add_option("name", scenario_name, "scenario name or 'all'")->required();
  scenario.add_common("out");
  scenario.add({"jobs", Kind::kInt, 1, "scenarios run concurrently with 'all'"});
  scenario.add({"beta", Kind::kDouble, nullptr, "KL regularization strength"});
  scenario.add({"eps", Kind::kDouble, nullptr, "in-distribution reward error (prop41)"});
  scenario.add({"alpha", Kind::kDouble, nullptr, "pi(y2) of the constructed policy (ipo_counterexample)"});
  scenario.add({"p_star", Kind::kDouble, nullptr, "preference probability of y1 over y2 (ipo_counterexample)"});
  scenario.add({"lambda", Kind::kDouble, nullptr, "online KL weight (separation)"});
  scenario.add({"r_bound", Kind::kDouble, nullptr, "reward bound R (forward_kl)"});
  scenario.add({"clip", Kind::kDouble, nullptr, "reward clip R'"});
  scenario.add({"learning_rate", Kind::kDouble, nullptr, "step size", {}, "--lr"});
  scenario.add({"n", Kind::kInt, nullptr, "construction size (forward_kl) or number of pairs"});
  scenario.add({"iterations", Kind::kInt, nullptr, "training iterations"});

  Command generate{app.add_subcommand("generate", "sample a preference dataset")};
  generate.add_common("out");
  generate.add({"instance", Kind::kString, nullptr, "instance JSON; default a random promptless instance"});
  generate.add({"num_responses", Kind::kInt, 5, "responses of the default instance"});
  generate.add({"n", Kind::kInt, 1000, "number of triples"});

  Command train{app.add_subcommand("train", "train a policy on a dataset")};
  train.add_common("out");
  train.add({"algo", Kind::kString, nullptr, "learner", {"rlhf", "dpo", "ipo", "hypo"}});
  train.add({"data", Kind::kString, nullptr, "dataset directory or file"});
  train.add({"instance", Kind::kString, nullptr, "instance JSON; default <data>/instance.json"});
  train.add({"param", Kind::kString, "tabular", "policy parameterization", {"tabular", "linear"}});
  train.add({"beta", Kind::kDouble, 0.1, "KL regularization strength"});
  train.add({"learning_rate", Kind::kDouble, 0.05, "step size", {}, "--lr"});
  train.add({"iterations", Kind::kInt, 1000, "training iterations"});
  train.add({"batch", Kind::kInt, 64, "minibatch size; >= dataset size means full batch"});
  train.add({"lambda", Kind::kDouble, 0.0, "online KL weight (hypo)"});
  train.add({"online_batch", Kind::kInt, 16, "online samples per iteration"});
  train.add({"clip", Kind::kDouble, nullptr, "reward clip R' (rlhf)"});
  train.add({"mode", Kind::kString, "exact", "rlhf policy step", {"exact", "gradient"}});
  train.add({"reward_class", Kind::kString, "tabular", "rlhf reward class", {"tabular", "linear"}});
  train.add({"reward_learning_rate", Kind::kDouble, 1.0, "BT reward fitting step size"});
  train.add({"reward_iterations", Kind::kInt, 2000, "BT reward fitting iterations"});
  train.add({"record_every", Kind::kInt, 1, "trace cadence"});

  Command coverage{app.add_subcommand("coverage", "coverage report for a reference policy")};
  coverage.add_common("out");
  coverage.add({"instance", Kind::kString, nullptr, "instance JSON; default uniform ref"});
  coverage.add({"num_responses", Kind::kInt, 5, "responses of the default instance"});
  coverage.add({"eps", Kind::kDoubleList, json::array({0.01, 0.1, 1.0}), "KL-ball radii, comma separated"});
  coverage.add({"ridge", Kind::kDouble, kDefaultRidge, "ridge for the linear coverage"});
  coverage.add({"fa_target", Kind::kString, "none", "comparator for linear coverage", {"none", "uniform", "optimal"}});
  coverage.add({"beta", Kind::kDouble, 0.1, "beta of the optimal comparator"});

  std::vector<std::string> argv_store{"preflab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (scenario.app->parsed()) {
      return cmd_scenario(scenario_name, scenario.resolve("scenario"), out, err, scenario.app->help());
    }
    if (generate.app->parsed()) return cmd_generate(generate.resolve("generate"), out);
    if (train.app->parsed()) return cmd_train(train.resolve("train"), out);
    if (coverage.app->parsed()) return cmd_coverage(coverage.resolve("coverage"), out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace preflab::cli
