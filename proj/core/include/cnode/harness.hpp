#pragma once

// Experiment harness behind the command-line tool: run directories, result
// files, aggregation over seeds and plot-data export.
//
// A run directory holds
//   history.csv   one PenaltyReport row per iteration
//   params.bin    final parameters (cnode-params v1)
//   result.json   status, config echo, metrics, wall time

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cnode/config.hpp"
#include "cnode/trainer.hpp"

namespace cnode {

/// Flat JSON object mirroring the command-line flags.
std::string config_to_json(const ExperimentConfig& config);
/// Accepts a flat config object or a result.json (reads its "config" member).
/// Keys that are absent keep their defaults. Throws ConfigError.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// `flag` if given, else $CNODE_OUT, else "cnode-out".
std::filesystem::path output_root(const std::optional<std::string>& flag);

/// Directory name for a run, e.g. "wpg-reconstruction-quadratic-mu10-s1".
std::string run_name(const ExperimentConfig& config);

/// Trains and writes history.csv, params.bin and result.json into `run_dir`.
/// Artifacts are written for diverged runs too (status "diverged").
RunResult execute_run(const ExperimentConfig& config, const std::filesystem::path& run_dir);

struct GridCell {
  ExperimentConfig config;
  std::filesystem::path run_dir;
  RunStatus status = RunStatus::kOk;
  std::string error;
};

/// The methods compared in the reference experiments: vanilla, quadratic with
/// mu in {1, 10, 100}, self-adaptive.
std::vector<ExperimentConfig> method_sweep(const ExperimentConfig& base);

/// Runs every config, `jobs` at a time. Each cell writes only into
/// root / run_name(config).
std::vector<GridCell> run_grid(const std::vector<ExperimentConfig>& configs,
                               const std::filesystem::path& root, unsigned jobs);

/// Writes "<system>-<task>-train.csv" and "-test.csv" into `dir`; returns both paths.
std::vector<std::filesystem::path> generate_datasets(SystemKind system, TaskKind task,
                                                     const std::filesystem::path& dir,
                                                     double noise_sigma = 0.0,
                                                     std::uint64_t noise_seed = 0);

struct StoredRun {
  ExperimentConfig config;
  std::string status;
  RunMetrics metrics;
};

/// Reads result.json from a run directory. Throws MissingArtifactError if absent.
StoredRun load_run(const std::filesystem::path& run_dir);

struct ReportRow {
  std::string system;
  std::string task;
  std::string method;
  std::size_t runs = 0;
  double mse_mean = 0.0;
  std::optional<double> mse_std;  // absent for a single run
  double p_mean = 0.0;
  std::optional<double> p_std;
  bool best_mse = false;
  bool best_p = false;
};

/// Groups by (system, task, method) and marks the per-(system, task) minima of
/// mean MSE and mean P independently. Throws ReportError if runs in one group
/// disagree on anything but seed and output directory.
std::vector<ReportRow> aggregate(const std::vector<StoredRun>& runs);

std::string format_report_table(const std::vector<ReportRow>& rows);
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

/// Writes "t,<name>_true...,<name>_pred..." for the run's test set (or
/// `test_csv` when given). Returns the number of data rows.
std::size_t write_plot_data(const std::filesystem::path& run_dir,
                            const std::optional<std::filesystem::path>& test_csv,
                            std::ostream& out);

}  // namespace cnode
