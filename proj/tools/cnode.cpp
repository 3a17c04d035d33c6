// cnode: generate datasets, train constrained Neural ODEs, aggregate runs and
// export curves for plotting.
//
// Exit codes: 0 ok, 2 usage or config error, 3 divergence, 4 missing artifact.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cnode/errors.hpp"
#include "cnode/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitMissing = 4;

struct TrainFlags {
  std::string config_file;
  std::string system, task, method, architecture, solver, run_dir;
  std::optional<double> mu, lr, feasibility_tol, zero_threshold, noise;
  std::optional<std::uint64_t> seed;
  std::optional<long> k_max;
  std::optional<int> substeps;
  std::vector<std::uint64_t> seeds;
  bool grid = false;
  bool full_scale = false;
  unsigned jobs = 1;
};

cnode::ExperimentConfig resolve_config(const TrainFlags& f) {
  cnode::ExperimentConfig c;
  if (!f.config_file.empty()) c = cnode::load_config_file(f.config_file);
  if (f.full_scale) {
    c.k_max = cnode::kFullIterations;
    c.lr = cnode::kFullLearningRate;
  }
  // Flags override the file.
  if (!f.system.empty()) c.system = cnode::parse_system(f.system);
  if (!f.task.empty()) c.task = cnode::parse_task(f.task);
  if (!f.method.empty()) c.method = cnode::parse_method(f.method);
  if (f.mu) c.mu = f.mu;
  if (f.seed) c.seed = *f.seed;
  if (f.k_max) c.k_max = *f.k_max;
  if (f.lr) c.lr = *f.lr;
  if (!f.architecture.empty()) c.architecture = f.architecture;
  if (!f.solver.empty()) c.solver.method = cnode::parse_solver_method(f.solver);
  if (f.substeps) c.solver.substeps = *f.substeps;
  if (f.feasibility_tol) c.feasibility_tol = *f.feasibility_tol;
  if (f.zero_threshold) c.zero_threshold = *f.zero_threshold;
  if (f.noise) c.noise_sigma = *f.noise;
  return c;
}

int cmd_generate(const std::string& system, const std::string& task, double noise,
                 std::uint64_t noise_seed, const std::optional<std::string>& out) {
  const auto paths = cnode::generate_datasets(cnode::parse_system(system),
                                              cnode::parse_task(task), cnode::output_root(out),
                                              noise, noise_seed);
  for (const auto& p : paths) std::cout << p.string() << '\n';
  return kExitOk;
}

int cmd_train(const TrainFlags& flags, const std::optional<std::string>& out) {
  cnode::ExperimentConfig base = resolve_config(flags);
  const fs::path root = cnode::output_root(out);

  if (!flags.grid && flags.seeds.empty()) {
    base.validate();
    const fs::path dir = !flags.run_dir.empty()     ? fs::path(flags.run_dir)
                         : !base.output_dir.empty() ? fs::path(base.output_dir)
                                                    : root / cnode::run_name(base);
    base.output_dir = dir.string();
    const cnode::RunResult r = cnode::execute_run(base, dir);
    std::cout << dir.string() << '\n';
    if (r.status == cnode::RunStatus::kDiverged) {
      std::cerr << "diverged: " << r.error << '\n';
      return kExitDiverged;
    }
    return kExitOk;
  }

  std::vector<cnode::ExperimentConfig> cells;
  const std::vector<std::uint64_t> seeds =
      flags.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : flags.seeds;
  const std::vector<cnode::ExperimentConfig> methods =
      flags.grid ? cnode::method_sweep(base) : std::vector<cnode::ExperimentConfig>{base};
  for (const auto& m : methods) {
    for (std::uint64_t s : seeds) {
      cnode::ExperimentConfig c = m;
      c.seed = s;
      c.validate();
      cells.push_back(c);
    }
  }
  int code = kExitOk;
  for (const cnode::GridCell& cell : cnode::run_grid(cells, root, flags.jobs)) {
    std::cout << cell.run_dir.string();
    if (cell.status == cnode::RunStatus::kDiverged) {
      std::cout << "  diverged: " << cell.error;
      code = kExitDiverged;
    }
    std::cout << '\n';
  }
  return code;
}

/// A path is a run directory if it holds result.json; otherwise its immediate
/// subdirectories that do are used.
std::vector<fs::path> expand_run_dirs(const std::vector<std::string>& args) {
  std::vector<fs::path> dirs;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::exists(p / "result.json")) {
      dirs.push_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw cnode::MissingArtifactError("no run directory at " + a);
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_directory() && fs::exists(entry.path() / "result.json")) {
        found.push_back(entry.path());
      }
    }
    if (found.empty()) throw cnode::MissingArtifactError("no result.json under " + a);
    std::sort(found.begin(), found.end());
    dirs.insert(dirs.end(), found.begin(), found.end());
  }
  return dirs;
}

int cmd_report(const std::vector<std::string>& run_args, const std::string& csv_path) {
  std::vector<cnode::StoredRun> runs;
  for (const fs::path& dir : expand_run_dirs(run_args)) runs.push_back(cnode::load_run(dir));
  const auto rows = cnode::aggregate(runs);
  std::cout << cnode::format_report_table(rows);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw cnode::ConfigError("cannot write " + csv_path);
    cnode::write_report_csv(csv, rows);
  }
  return kExitOk;
}

int cmd_plot_data(const std::string& run_dir, const std::string& test_set,
                  const std::string& out_path) {
  const fs::path dir(run_dir);
  if (!fs::exists(dir / "params.bin")) {
    throw cnode::MissingArtifactError("no params.bin in " + run_dir);
  }
  std::optional<fs::path> test;
  if (!test_set.empty()) test = test_set;
  if (out_path.empty()) {
    cnode::write_plot_data(dir, test, std::cout);
    return kExitOk;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw cnode::ConfigError("cannot write " + out_path);
  const std::size_t rows = cnode::write_plot_data(dir, test, out);
  std::cout << out_path << " (" << rows << " rows)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained Neural ODE toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> out;
  app.add_option("--out", out, "Output root (default: $CNODE_OUT, else ./cnode-out)");

  auto* gen = app.add_subcommand("generate", "Write train/test CSVs for a system and task");
  std::string gen_system, gen_task = "reconstruction";
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--system", gen_system, "wpg | cr | dho")->required();
  gen->add_option("--task", gen_task, "reconstruction | extrapolation | completion");
  gen->add_option("--noise", gen_noise, "Observation noise std")->check(CLI::NonNegativeNumber);
  gen->add_option("--noise-seed", gen_seed, "Noise seed");

  auto* train = app.add_subcommand("train", "Train one run, or a method/seed grid");
  TrainFlags tf;
  train->add_option("--config", tf.config_file, "Flat JSON config; flags override it");
  train->add_option("--system", tf.system, "wpg | cr | dho");
  train->add_option("--task", tf.task, "reconstruction | extrapolation | completion");
  train->add_option("--method", tf.method, "vanilla | quadratic | self-adaptive");
  train->add_option("--mu", tf.mu, "Quadratic penalty weight");
  train->add_option("--seed", tf.seed, "Initialisation and noise seed");
  train->add_option("--seeds", tf.seeds, "Several seeds, one run each")->delimiter(',');
  train->add_option("--k-max", tf.k_max, "Iterations");
  train->add_option("--lr", tf.lr, "Adam learning rate");
  train->add_option("--arch", tf.architecture, "Preset name or hidden layers, e.g. 50,tanh,50,elu");
  train->add_option("--solver", tf.solver, "rk4 | euler");
  train->add_option("--substeps", tf.substeps, "Solver steps per grid interval");
  train->add_option("--feasibility-tol", tf.feasibility_tol, "Feasibility tolerance on P");
  train->add_option("--zero-threshold", tf.zero_threshold, "Violation counted when v > this");
  train->add_option("--noise", tf.noise, "Observation noise std on the training data");
  train->add_option("--run-dir", tf.run_dir, "Explicit run directory (single runs only)");
  train->add_flag("--grid", tf.grid, "Sweep vanilla, quadratic mu=1,10,100 and self-adaptive");
  train->add_flag("--full-scale", tf.full_scale, "10000 iterations at lr 1e-5");
  train->add_option("--jobs", tf.jobs, "Parallel grid workers")
      ->default_val(1)
      ->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Aggregate run directories into a table");
  std::vector<std::string> report_dirs;
  std::string report_csv;
  report->add_option("runs", report_dirs, "Run directories or roots containing them")->required();
  report->add_option("--csv", report_csv, "Also write the table as CSV");

  auto* plot = app.add_subcommand("plot-data", "Export true and predicted curves as CSV");
  std::string plot_dir, plot_test, plot_out;
  plot->add_option("run", plot_dir, "Run directory")->required();
  plot->add_option("--test-set", plot_test, "Dataset CSV to predict (default: the run's test set)");
  plot->add_option("-o,--output", plot_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_system, gen_task, gen_noise, gen_seed, out);
    if (*train) return cmd_train(tf, out);
    if (*report) return cmd_report(report_dirs, report_csv);
    if (*plot) return cmd_plot_data(plot_dir, plot_test, plot_out);
  } catch (const cnode::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissing;
  } catch (const cnode::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const cnode::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
