// leaware: command-line front end.
//
//   leaware gen-data [--config F] [--seed S] [--out DIR] [--data-fraction F]
//   leaware train    [--config F] [--seed S] [--out DIR] [--optimizer NAME[:LR]]
//                    [--data-fraction F] [--reset-perturbation-per-epoch] [--verbose]
//   leaware compare  [--config F] [--seed S] [--out DIR] [--optimizer A,B[:LR],...]
//                    [--repeats N] [--data-fraction F]
//   leaware le-map   [--map logistic|tent|linear] [--param P] [--x0 X] [--steps N]
//
// Exit status: 0 success, 1 invalid config or arguments, 2 diverged run.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leaware/config.hpp"
#include "leaware/errors.hpp"
#include "leaware/harness.hpp"
#include "leaware/lyapunov.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> data_fraction;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--data-fraction", a.data_fraction, "stratified source fraction in (0, 1]");
  cmd->add_flag("--verbose", a.verbose, "per-iteration output");
}

leaware::ExperimentConfig resolve(const CommonArgs& a) {
  leaware::ExperimentConfig cfg = a.config.empty() ? leaware::ExperimentConfig{}
                                                   : leaware::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.out) cfg.output_dir = *a.out;
  if (a.data_fraction) cfg.data_fraction = *a.data_fraction;
  if (a.verbose) cfg.verbose = true;
  return cfg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int gen_data(const leaware::ExperimentConfig& cfg) {
  const auto suite = leaware::build_domain_suite(cfg);
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  leaware::save_csv(suite.source, dir / "source.csv");
  for (const auto& t : suite.targets) leaware::save_csv(t, dir / ("target_" + t.domain + ".csv"));
  const auto counts = leaware::class_counts(suite.source);
  std::cout << "source: " << suite.source.size() << " samples (";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::cout << (c ? ", " : "") << "class " << c << ": " << counts[c];
  }
  std::cout << ")\n";
  for (const auto& t : suite.targets) std::cout << t.domain << ": " << t.size() << " samples\n";
  return kExitOk;
}

int train(leaware::ExperimentConfig cfg, const std::optional<std::string>& optimizer,
          bool reset_perturbation) {
  if (optimizer) {
    const auto choice = leaware::OptimizerChoice::parse(*optimizer);
    cfg.optimizer.kind = choice.kind;
    if (!std::isnan(choice.lr)) cfg.optimizer.lr = choice.lr;
  }
  if (reset_perturbation) cfg.lyapunov.reset_per_epoch = true;
  cfg.validate();

  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", leaware::dump_config(cfg));

  const auto result = leaware::run_training(cfg);
  leaware::emit_metrics(result, dir / "metrics.csv");
  leaware::emit_plot_data(result, dir);
  leaware::emit_lr_history(result, dir / "lr_history.csv");
  if (cfg.verbose) leaware::emit_iterations(result, dir / "iterations.csv");

  for (const auto& r : result.rows) {
    if (!cfg.verbose && r.epoch != static_cast<int>(result.rows.size())) continue;
    std::printf("epoch %3d  loss %.5f  lr %.3e  le %+.5f  dle %+.2e  renorm %lld", r.epoch,
                r.train_loss, r.lr, r.le, r.delta_le, static_cast<long long>(r.renorm_count));
    for (std::size_t k = 0; k < r.target_accuracy.size(); ++k) {
      std::printf("  %s %.4f", result.target_tags[k].c_str(), r.target_accuracy[k]);
    }
    std::printf("\n");
  }
  if (result.status == leaware::RunStatus::diverged) {
    std::cerr << "run diverged: " << result.message << " (" << result.rows.size()
              << " epochs written to " << (dir / "metrics.csv").string() << ")\n";
    return kExitDiverged;
  }
  std::printf("mean target accuracy %.4f\n", result.final_mean_accuracy());
  return kExitOk;
}

int compare(leaware::ExperimentConfig cfg, const std::string& optimizer_list, int repeats) {
  if (repeats < 1) throw leaware::ConfigError("--repeats must be >= 1");
  std::vector<leaware::OptimizerChoice> choices;
  std::size_t start = 0;
  while (start <= optimizer_list.size()) {
    const auto comma = optimizer_list.find(',', start);
    const auto item = optimizer_list.substr(start, comma == std::string::npos ? std::string::npos
                                                                              : comma - start);
    if (!item.empty()) choices.push_back(leaware::OptimizerChoice::parse(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (choices.empty()) throw leaware::ConfigError("--optimizer list is empty");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(repeats));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = cfg.seed + i;

  const auto table = leaware::run_comparison(cfg, choices, seeds);
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", leaware::dump_config(cfg));
  leaware::emit_comparison(table, dir / "comparison.csv");
  std::cout << table.format();
  for (const auto& c : table.cells) {
    if (c.status != leaware::RunStatus::completed) return kExitDiverged;
  }
  return kExitOk;
}

int le_map(const std::string& kind, double param, double x0, std::int64_t steps) {
  leaware::MapSpec map{leaware::parse_map_kind(kind), param};
  const auto t0 = std::chrono::steady_clock::now();
  const auto est = leaware::map_le(map, x0, steps);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  std::printf("map %s param %.17g x0 %.17g steps %lld\nle %.10f\nelapsed_ms %.3f\n", kind.c_str(),
              param, x0, static_cast<long long>(est.steps), est.value, ms);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov-exponent-aware training for domain generalization"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-data", "write the source and target domains as CSV");
  add_common(gen_cmd, gen_args);

  CommonArgs train_args;
  std::optional<std::string> train_optimizer;
  bool reset_perturbation = false;
  auto* train_cmd = app.add_subcommand("train", "train one model and write metrics");
  add_common(train_cmd, train_args);
  train_cmd->add_option("--optimizer", train_optimizer, "leaware|sgd|adam|adamw|rmsprop[:lr]");
  train_cmd->add_flag("--reset-perturbation-per-epoch", reset_perturbation,
                      "re-draw the LE perturbation at every epoch");

  CommonArgs cmp_args;
  std::string cmp_optimizers = "leaware,sgd,adam,adamw,rmsprop";
  int repeats = 10;
  auto* cmp_cmd = app.add_subcommand("compare", "optimizer x seed comparison table");
  add_common(cmp_cmd, cmp_args);
  cmp_cmd->add_option("--optimizer", cmp_optimizers, "comma-separated optimizer[:lr] list")
      ->capture_default_str();
  cmp_cmd->add_option("--repeats", repeats, "seeds seed..seed+repeats-1")->capture_default_str();

  std::string map_kind = "logistic";
  double map_param = 4.0;
  double map_x0 = 0.3;
  std::int64_t map_steps = 100000;
  auto* map_cmd = app.add_subcommand("le-map", "Lyapunov exponent of a one-dimensional map");
  map_cmd->add_option("--map", map_kind, "logistic|tent|linear")->capture_default_str();
  map_cmd->add_option("--param", map_param, "r, mu or slope")->capture_default_str();
  map_cmd->add_option("--x0", map_x0, "initial point")->capture_default_str();
  map_cmd->add_option("--steps", map_steps, "orbit length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) {
      auto cfg = resolve(gen_args);
      cfg.validate();
      return gen_data(cfg);
    }
    if (*train_cmd) return train(resolve(train_args), train_optimizer, reset_perturbation);
    if (*cmp_cmd) return compare(resolve(cmp_args), cmp_optimizers, repeats);
    if (*map_cmd) return le_map(map_kind, map_param, map_x0, map_steps);
  } catch (const leaware::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
