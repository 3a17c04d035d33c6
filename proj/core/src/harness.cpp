#include "cnode/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cnode/errors.hpp"
#include "cnode/param_io.hpp"

namespace cnode {
namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["system"] = to_string(c.system);
  j["task"] = to_string(c.task);
  j["method"] = to_string(c.method);
  if (c.mu) j["mu"] = *c.mu;
  j["seed"] = c.seed;
  j["k_max"] = c.k_max;
  j["lr"] = c.lr;
  j["architecture"] = c.architecture.empty() ? to_string(c.system) : c.architecture;
  j["solver"] = to_string(c.solver.method);
  j["substeps"] = c.solver.substeps;
  j["feasibility_tol"] = c.feasibility_tol;
  j["zero_threshold"] = c.zero_threshold;
  j["noise_sigma"] = c.noise_sigma;
  j["output_dir"] = c.output_dir;
  return j;
}

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "system", "task",           "method",         "mu",          "seed",      "k_max",
      "lr",     "architecture",   "solver",         "substeps",    "feasibility_tol",
      "zero_threshold", "noise_sigma", "output_dir"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c;
  std::string s;
  if (j.contains("system")) read_key(j, "system", s), c.system = parse_system(s);
  if (j.contains("task")) read_key(j, "task", s), c.task = parse_task(s);
  if (j.contains("method")) read_key(j, "method", s), c.method = parse_method(s);
  if (j.contains("mu") && !j.at("mu").is_null()) {
    double mu = 0.0;
    read_key(j, "mu", mu);
    c.mu = mu;
  }
  read_key(j, "seed", c.seed);
  read_key(j, "k_max", c.k_max);
  read_key(j, "lr", c.lr);
  read_key(j, "architecture", c.architecture);
  if (j.contains("solver")) read_key(j, "solver", s), c.solver.method = parse_solver_method(s);
  read_key(j, "substeps", c.solver.substeps);
  read_key(j, "feasibility_tol", c.feasibility_tol);
  read_key(j, "zero_threshold", c.zero_threshold);
  read_key(j, "noise_sigma", c.noise_sigma);
  read_key(j, "output_dir", c.output_dir);
  if (c.architecture == to_string(c.system)) c.architecture.clear();
  return c;
}

/// JSON has no infinities; non-finite metrics are stored as null.
json metric(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double metric_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::infinity();
  return j.at(key).get<double>();
}

std::string sci(double v) {
  if (!std::isfinite(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string label_for_dir(const ExperimentConfig& c) {
  std::string m = to_string(c.method);
  if (c.method == Method::kQuadratic && c.mu) m += "-mu" + format_real(*c.mu);
  return m;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("config") && j.at("config").is_object()) {
    return from_json(j.at("config"));
  }
  return from_json(j);
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return config_from_json(read_file(path));
}

std::filesystem::path output_root(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("CNODE_OUT"); env != nullptr && *env != '\0') return env;
  return "cnode-out";
}

std::string run_name(const ExperimentConfig& c) {
  return to_string(c.system) + "-" + to_string(c.task) + "-" + label_for_dir(c) + "-s" +
         std::to_string(c.seed);
}

RunResult execute_run(const ExperimentConfig& config, const std::filesystem::path& run_dir) {
  config.validate();
  std::filesystem::create_directories(run_dir);
  const TrainingProblem problem = TrainingProblem::from_config(config);
  RunResult result = run_experiment(config);

  {
    std::ofstream history(run_dir / "history.csv", std::ios::trunc);
    if (!history) throw ConfigError("cannot write history.csv in " + run_dir.string());
    write_history_csv(history, problem.constraints, result.history);
  }
  write_params(run_dir / "params.bin", result.theta_final);

  json j;
  j["status"] = result.status == RunStatus::kOk ? "ok" : "diverged";
  if (!result.error.empty()) j["error"] = result.error;
  j["config"] = to_json(config);
  j["metrics"] = {{"train_mse", metric(result.metrics.train_mse)},
                  {"train_p_raw", metric(result.metrics.train_p_raw)},
                  {"test_mse", metric(result.metrics.test_mse)},
                  {"test_p_raw", metric(result.metrics.test_p_raw)},
                  {"diverged", result.metrics.diverged}};
  j["phi_best"] = metric(result.phi_best);
  j["iterations"] = result.history.size();
  j["param_count"] = problem.net.param_count();
  j["seed"] = config.seed;
  j["wall_time_s"] = result.wall_time_s;
  write_file(run_dir / "result.json", j.dump(2) + "\n");
  return result;
}

std::vector<ExperimentConfig> method_sweep(const ExperimentConfig& base) {
  std::vector<ExperimentConfig> out;
  ExperimentConfig c = base;
  c.mu.reset();
  c.method = Method::kVanilla;
  out.push_back(c);
  for (double mu : {1.0, 10.0, 100.0}) {
    c.method = Method::kQuadratic;
    c.mu = mu;
    out.push_back(c);
  }
  c.method = Method::kSelfAdaptive;
  c.mu.reset();
  out.push_back(c);
  return out;
}

std::vector<GridCell> run_grid(const std::vector<ExperimentConfig>& configs,
                               const std::filesystem::path& root, unsigned jobs) {
  std::vector<GridCell> cells(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    cells[i].config = configs[i];
    cells[i].run_dir = root / run_name(configs[i]);
    cells[i].config.output_dir = cells[i].run_dir.string();
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      GridCell& cell = cells[i];
      try {
        const RunResult r = execute_run(cell.config, cell.run_dir);
        cell.status = r.status;
        cell.error = r.error;
      } catch (const std::exception& e) {
        cell.status = RunStatus::kDiverged;
        cell.error = e.what();
      }
    }
  };
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return cells;
}

std::vector<std::filesystem::path> generate_datasets(SystemKind system, TaskKind task,
                                                     const std::filesystem::path& dir,
                                                     double noise_sigma,
                                                     std::uint64_t noise_seed) {
  SystemSpec base = SystemSpec::defaults(system);
  base.noise_sigma = noise_sigma;
  base.noise_seed = noise_seed;
  const TaskSpec spec = TaskSpec::defaults(system, task);
  const auto [train, test] = make_task(base, spec);
  std::filesystem::create_directories(dir);
  const std::string stem = to_string(system) + "-" + to_string(task);
  std::vector<std::filesystem::path> paths = {dir / (stem + "-train.csv"),
                                              dir / (stem + "-test.csv")};
  for (std::size_t i = 0; i < 2; ++i) {
    std::ofstream out(paths[i], std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + paths[i].string());
    write_dataset_csv(out, base, i == 0 ? train : test);
  }
  return paths;
}

StoredRun load_run(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "result.json";
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("no result.json in " + run_dir.string());
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ReportError("malformed " + path.string() + ": " + e.what());
  }
  StoredRun run;
  run.config = from_json(j.at("config"));
  run.status = j.value("status", "ok");
  const json& m = j.at("metrics");
  run.metrics.train_mse = metric_from(m, "train_mse");
  run.metrics.train_p_raw = metric_from(m, "train_p_raw");
  run.metrics.test_mse = metric_from(m, "test_mse");
  run.metrics.test_p_raw = metric_from(m, "test_p_raw");
  run.metrics.diverged = m.value("diverged", false);
  return run;
}

std::vector<ReportRow> aggregate(const std::vector<StoredRun>& runs) {
  if (runs.empty()) throw ReportError("no runs to report");
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const StoredRun*>> groups;
  std::vector<Key> order;
  for (const StoredRun& r : runs) {
    Key key{to_string(r.config.system), to_string(r.config.task), r.config.method_label()};
    auto& group = groups[key];
    if (group.empty()) order.push_back(key);
    if (!group.empty()) {
      ExperimentConfig a = group.front()->config;
      ExperimentConfig b = r.config;
      a.seed = b.seed = 0;
      a.output_dir.clear();
      b.output_dir.clear();
      if (!(a == b)) {
        throw ReportError("runs grouped under " + std::get<0>(key) + "/" + std::get<1>(key) + "/" +
                          std::get<2>(key) + " have inconsistent configurations");
      }
    }
    group.push_back(&r);
  }

  auto mean_std = [](const std::vector<double>& xs) -> std::pair<double, std::optional<double>> {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, std::nullopt};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
  };

  std::vector<ReportRow> rows;
  for (const Key& key : order) {
    const auto& group = groups.at(key);
    std::vector<double> mse, p;
    for (const StoredRun* r : group) {
      mse.push_back(r->metrics.test_mse);
      p.push_back(r->metrics.test_p_raw);
    }
    ReportRow row;
    std::tie(row.system, row.task, row.method) = key;
    row.runs = group.size();
    std::tie(row.mse_mean, row.mse_std) = mean_std(mse);
    std::tie(row.p_mean, row.p_std) = mean_std(p);
    rows.push_back(std::move(row));
  }

  std::map<std::pair<std::string, std::string>, std::pair<double, double>> minima;
  for (const ReportRow& r : rows) {
    auto [it, inserted] = minima.try_emplace({r.system, r.task}, r.mse_mean, r.p_mean);
    if (!inserted) {
      it->second.first = std::min(it->second.first, r.mse_mean);
      it->second.second = std::min(it->second.second, r.p_mean);
    }
  }
  for (ReportRow& r : rows) {
    const auto& [best_mse, best_p] = minima.at({r.system, r.task});
    r.best_mse = r.mse_mean == best_mse;
    r.best_p = r.p_mean == best_p;
  }
  return rows;
}

std::string format_report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  auto pm = [](double mean, const std::optional<double>& sd) {
    return sci(mean) + " +- " + (sd ? sci(*sd) : std::string("NA"));
  };
  out << std::left << std::setw(5) << "sys" << std::setw(16) << "task" << std::setw(22) << "method"
      << std::setw(4) << "n" << std::setw(24) << "MSE +- std" << std::setw(24) << "P +- std"
      << "best\n";
  for (const ReportRow& r : rows) {
    std::string best;
    if (r.best_mse) best += "MSE";
    if (r.best_p) best += best.empty() ? "P" : ",P";
    out << std::left << std::setw(5) << r.system << std::setw(16) << r.task << std::setw(22)
        << r.method << std::setw(4) << r.runs << std::setw(24) << pm(r.mse_mean, r.mse_std)
        << std::setw(24) << pm(r.p_mean, r.p_std) << best << '\n';
  }
  return out.str();
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("NA"); };
  out << "system,task,method,runs,mse_mean,mse_std,p_mean,p_std,best_mse,best_p\n";
  for (const ReportRow& r : rows) {
    out << r.system << ',' << r.task << ',' << r.method << ',' << r.runs << ','
        << format_real(r.mse_mean) << ',' << opt(r.mse_std) << ',' << format_real(r.p_mean) << ','
        << opt(r.p_std) << ',' << (r.best_mse ? 1 : 0) << ',' << (r.best_p ? 1 : 0) << '\n';
  }
}

std::size_t write_plot_data(const std::filesystem::path& run_dir,
                            const std::optional<std::filesystem::path>& test_csv,
                            std::ostream& out) {
  const StoredRun run = load_run(run_dir);
  const std::vector<double> theta = read_params(run_dir / "params.bin");
  const TrainingProblem problem = TrainingProblem::from_config(run.config);

  Trajectory test = problem.test;
  if (test_csv) {
    std::ifstream in(*test_csv);
    if (!in) throw MissingArtifactError("cannot read test set " + test_csv->string());
    Dataset ds = read_dataset_csv(in);
    if (ds.system != run.config.system) {
      throw ConfigError("test set system does not match the run's system");
    }
    test = std::move(ds.trajectory);
  }
  if (theta.size() != problem.net.param_count()) {
    throw ConfigError("params.bin does not match the run's architecture");
  }

  const auto names = state_names(run.config.system);
  std::vector<std::vector<double>> pred;
  try {
    pred = predict(problem.net, theta, test, problem.solver).states;
  } catch (const DivergenceError&) {
    // Keep the row count equal to the test set size; diverged predictions are written as nan.
    pred.assign(test.size(), std::vector<double>(names.size(), std::nan("")));
  }

  out << 't';
  for (const auto& n : names) out << ',' << n << "_true";
  for (const auto& n : names) out << ',' << n << "_pred";
  out << '\n';
  for (std::size_t i = 0; i < test.size(); ++i) {
    out << format_real(test.grid[i]);
    for (double v : test.states[i]) out << ',' << format_real(v);
    for (double v : pred[i]) out << ',' << format_real(v);
    out << '\n';
  }
  return test.size();
}

}  // namespace cnode
