#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "leaware/augment.hpp"
#include "leaware/diffengine.hpp"
#include "leaware/domains.hpp"
#include "leaware/lyapunov.hpp"
#include "leaware/optimizers.hpp"

namespace leaware {

struct SourceSpec {
  std::string kind = "two_moons";  ///< two_moons | blobs
  std::size_t n = 400;
  double noise = 0.1;   ///< two_moons
  int classes = 2;      ///< blobs
  double spread = 0.3;  ///< blobs
};

struct TargetSpec {
  std::string tag;
  DomainShift shift;
};

struct DomainSuiteSpec {
  SourceSpec source;
  std::vector<TargetSpec> targets;

  /// Two-moons source (noise 0.1) with three targets rotated by 20, 40 and
  /// 60 degrees plus noise 0.2.
  static DomainSuiteSpec default_suite();
};

struct LyapunovSettings {
  LeMethod method = LeMethod::two_trajectory;
  double fd_step = kDefaultHvpStep;
  /// Re-draw the perturbation at the start of every epoch.
  bool reset_per_epoch = false;
};

struct ExperimentConfig {
  ModelSpec model{{2, 16, 2}, Activation::tanh, OutputKind::softmax_cross_entropy};
  OptimizerConfig optimizer;
  LyapunovSettings lyapunov;
  bool aug_enabled = true;
  AugConfig aug;  ///< aug.seed is ignored; the harness derives it from `seed`
  DomainSuiteSpec domains = DomainSuiteSpec::default_suite();
  int epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double data_fraction = 1.0;
  std::string output_dir = "out";
  bool verbose = false;

  /// Throws ConfigError.
  void validate() const;
};

struct DomainSuite {
  DomainDataset source;  ///< after data_fraction subsampling
  std::vector<DomainDataset> targets;
};

/// Generates the source and target domains from the labeled seed streams.
/// Targets are shifted copies of a fresh source draw of the full size.
DomainSuite build_domain_suite(const ExperimentConfig& cfg);

struct MetricsRow {
  int epoch = 0;
  std::int64_t iteration = 0;  ///< iterations completed so far
  double train_loss = 0.0;     ///< mean regularized minibatch loss this epoch
  double lr = 0.0;             ///< learning rate after the epoch
  double le = 0.0;             ///< LE of the latest completed window
  double delta_le = 0.0;       ///< le minus the previous window's le (0 for the first)
  std::int64_t renorm_count = 0;
  std::vector<double> target_accuracy;  ///< aligned with RunResult::target_tags
};

struct IterationRow {
  int epoch = 0;
  std::int64_t iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  double le_running = 0.0;  ///< cumulative finite-time LE since the last reset
  std::int64_t renorm_count = 0;
};

enum class RunStatus { completed, diverged };

struct RunResult {
  RunStatus status = RunStatus::completed;
  std::string message;
  ParamVector params;
  std::vector<std::string> target_tags;
  std::vector<MetricsRow> rows;
  std::vector<IterationRow> iterations;  ///< only filled when cfg.verbose
  std::vector<LrChange> lr_history;
  std::vector<std::size_t> source_class_counts;
  std::int64_t floor_hits = 0;
  /// Set if the perturbation ever collapsed to zero (LE = -inf).
  bool le_merged = false;

  double final_mean_accuracy() const;
};

/// Argmax accuracy; ties go to the lower class index. Throws on empty data.
double evaluate(const ModelSpec& spec, const ParamVector& params, const DomainDataset& data);

RunResult run_training(const ExperimentConfig& cfg);
/// Same loop on a prepared suite (cfg.domains and cfg.data_fraction unused).
RunResult run_training(const ExperimentConfig& cfg, const DomainSuite& suite);

/// Plain GD on 0.5 * theta^T A theta with tangent LE tracking, reported in
/// the same row format (one row per epoch of `steps_per_epoch` steps).
RunResult run_quadratic_fixture(const SymmetricMatrix& a, const ParamVector& theta0, double lr,
                                int epochs, int steps_per_epoch, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// "name" or "name:lr", e.g. "adam:0.001".
struct OptimizerChoice {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = std::numeric_limits<double>::quiet_NaN();  ///< NaN = use the base config lr

  static OptimizerChoice parse(const std::string& text);
  std::string label() const;
};

struct ComparisonCell {
  std::string optimizer;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::completed;
  std::string message;
  std::vector<double> target_accuracy;
  double mean_accuracy = 0.0;
  std::vector<double> le_by_epoch;
};

struct ComparisonRow {
  std::string optimizer;
  std::string target;  ///< target tag or "avg"
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation over completed runs
  std::size_t completed = 0;
  std::size_t aborted = 0;
};

struct ComparisonTable {
  std::vector<std::string> target_tags;
  std::vector<ComparisonCell> cells;  ///< ordered by (optimizer position, seed position)
  std::vector<ComparisonRow> rows;

  /// Human-readable table with accuracies in percent as "mean ± std".
  std::string format() const;
};

ComparisonTable run_comparison(const ExperimentConfig& base,
                               std::span<const OptimizerChoice> optimizers,
                               std::span<const std::uint64_t> seeds);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};
/// Single-pass (Welford) mean and sample standard deviation.
MeanStd mean_and_stddev(std::span<const double> values);

/// Column order: epoch,iteration,train_loss,lr,le,delta_le,renorm_count,acc_<tag>...
void emit_metrics(const RunResult& result, const std::filesystem::path& path);
/// Writes le_vs_epoch.csv (epoch,le) and lr_vs_epoch.csv (epoch,lr) into `dir`.
void emit_plot_data(const RunResult& result, const std::filesystem::path& dir);
void emit_iterations(const RunResult& result, const std::filesystem::path& path);
void emit_lr_history(const RunResult& result, const std::filesystem::path& path);
void emit_comparison(const ComparisonTable& table, const std::filesystem::path& path);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace leaware
