#include "leaware/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "leaware/errors.hpp"
#include "leaware/kernels.hpp"
#include "leaware/rng.hpp"

namespace leaware {

namespace {

constexpr double kDivergenceLoss = 1e6;

double degrees(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

DomainSuiteSpec DomainSuiteSpec::default_suite() {
  DomainSuiteSpec s;
  for (int deg : {20, 40, 60}) {
    TargetSpec t;
    t.tag = "rot" + std::to_string(deg);
    t.shift.rotation = degrees(deg);
    t.shift.noise = 0.2;
    s.targets.push_back(t);
  }
  return s;
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
    optimizer.validate();
    if (aug_enabled) aug.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
    throw ConfigError("data_fraction must lie in (0, 1]");
  }
  if (!(lyapunov.fd_step > 0.0)) throw ConfigError("lyapunov.fd_step must be > 0");
  if (domains.source.kind != "two_moons" && domains.source.kind != "blobs") {
    throw ConfigError("unknown source kind '" + domains.source.kind + "'");
  }
  if (domains.source.n < 2) throw ConfigError("source n must be >= 2");
  const int classes = domains.source.kind == "two_moons" ? 2 : domains.source.classes;
  if (domains.source.kind == "blobs" && classes < 2) throw ConfigError("blobs need >= 2 classes");
  if (model.input_dim() != 2) throw ConfigError("synthetic domains are 2-d; model input must be 2");
  if (model.output == OutputKind::softmax_cross_entropy &&
      model.output_dim() != static_cast<std::size_t>(classes)) {
    throw ConfigError("model output size must equal the number of classes (" +
                      std::to_string(classes) + ")");
  }
  if (model.output != OutputKind::softmax_cross_entropy) {
    throw ConfigError("training on domain suites needs the softmax_ce output");
  }
  if (batch_size > domains.source.n) throw ConfigError("batch_size exceeds the source size");
  for (const auto& t : domains.targets) {
    if (t.tag.empty() || t.tag.find_first_of(", \n") != std::string::npos) {
      throw ConfigError("target tags must be non-empty tokens without commas or spaces");
    }
  }
}

DomainSuite build_domain_suite(const ExperimentConfig& cfg) {
  const auto& src = cfg.domains.source;
  auto generate = [&](std::uint64_t seed) {
    return src.kind == "blobs" ? gen_blobs(src.n, src.classes, src.spread, seed)
                               : gen_two_moons(src.n, src.noise, seed);
  };
  DomainSuite suite;
  const auto full = generate(stream_seed(cfg.seed, SeedStream::data));
  suite.source = stratified_subsample(full, cfg.data_fraction,
                                      stream_seed(cfg.seed, SeedStream::subsample));
  suite.source.domain = "source";

  const std::uint64_t target_seed = stream_seed(cfg.seed, SeedStream::targets);
  const auto base = generate(derive_seed(target_seed, 0));
  for (std::size_t k = 0; k < cfg.domains.targets.size(); ++k) {
    const auto& t = cfg.domains.targets[k];
    suite.targets.push_back(shift_domain(base, t.shift, t.tag, derive_seed(target_seed, k + 1)));
  }
  return suite;
}

double RunResult::final_mean_accuracy() const {
  if (rows.empty() || rows.back().target_accuracy.empty()) return 0.0;
  const auto& acc = rows.back().target_accuracy;
  return std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
}

double evaluate(const ModelSpec& spec, const ParamVector& params, const DomainDataset& data) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const auto logits = forward(spec, params, make_batch(data));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

// Tracks the windowed finite-time LE on top of the cumulative perturbation
// state.
struct LeWindowTracker {
  std::int64_t window = 1;
  std::int64_t steps_in_window = 0;
  double sum_at_start = 0.0;
  std::optional<double> last_le;
  double last_delta = 0.0;

  void restart(const PerturbationState& p) {
    steps_in_window = 0;
    sum_at_start = p.log_stretch_sum;
  }

  // Returns the window LE when this step closes a window.
  std::optional<double> after_step(const PerturbationState& p) {
    ++steps_in_window;
    if (steps_in_window < window) return std::nullopt;
    const double le = p.merged ? -std::numeric_limits<double>::infinity()
                               : (p.log_stretch_sum - sum_at_start) /
                                     static_cast<double>(steps_in_window);
    last_delta = last_le ? le - *last_le : 0.0;
    last_le = le;
    restart(p);
    return le;
  }
};

PerturbationState fresh_perturbation(const ParamVector& params, double delta_mag,
                                     std::uint64_t seed) {
  const double scale = norm(params);
  const double magnitude = delta_mag * (scale > 0.0 ? scale : 1.0);
  return init_perturbation(params.dim(), magnitude, seed);
}

}  // namespace

RunResult run_training(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_training(cfg, build_domain_suite(cfg));
}

RunResult run_training(const ExperimentConfig& cfg, const DomainSuite& suite) {
  cfg.validate();
  suite.source.validate();
  const auto& spec = cfg.model;
  const std::size_t dim = parameter_count(spec);

  RunResult result;
  result.source_class_counts = class_counts(suite.source);
  for (const auto& t : suite.targets) result.target_tags.push_back(t.domain);

  ParamVector params = init_params(spec, stream_seed(cfg.seed, SeedStream::init));
  Optimizer opt(cfg.optimizer, dim);
  const double gamma_step = cfg.optimizer.coupled_weight_decay();
  const double gamma_le = cfg.optimizer.weight_decay;

  const std::uint64_t pert_seed = stream_seed(cfg.seed, SeedStream::perturbation);
  PerturbationState pert = fresh_perturbation(params, cfg.optimizer.delta_mag, pert_seed);

  const std::size_t copies = cfg.aug_enabled ? static_cast<std::size_t>(cfg.aug.samples_per_input) : 0;
  const std::size_t n_train = suite.source.size() * (1 + copies);
  const std::size_t batch_size = std::min(cfg.batch_size, n_train);
  const auto batches_per_epoch = static_cast<std::int64_t>((n_train + batch_size - 1) / batch_size);

  LeWindowTracker tracker;
  tracker.window = cfg.optimizer.le_window > 0 ? cfg.optimizer.le_window : batches_per_epoch;
  tracker.restart(pert);

  const std::uint64_t aug_seed = stream_seed(cfg.seed, SeedStream::augmentation);
  const std::uint64_t batch_seed = stream_seed(cfg.seed, SeedStream::batching);
  std::int64_t iteration = 0;

  auto abort_run = [&](const std::string& why) {
    result.status = RunStatus::diverged;
    result.message = why;
  };

  for (int epoch = 1; epoch <= cfg.epochs && result.status == RunStatus::completed; ++epoch) {
    if (cfg.lyapunov.reset_per_epoch && epoch > 1) {
      pert = fresh_perturbation(params, cfg.optimizer.delta_mag,
                                derive_seed(pert_seed, static_cast<std::uint64_t>(epoch)));
      tracker.restart(pert);
    }

    DomainDataset train = suite.source;
    if (cfg.aug_enabled) {
      AugConfig acfg = cfg.aug;
      acfg.seed = derive_seed(aug_seed, static_cast<std::uint64_t>(epoch));
      try {
        train = augment_dataset(spec, params, suite.source, acfg, batch_size);
      } catch (const NumericalError& e) {
        abort_run(std::string("augmentation failed: ") + e.what());
        break;
      }
    }

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(batch_seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Batch batch = make_batch(train, idx);
      try {
        const auto lg = loss_and_grad(spec, params, batch, gamma_step);
        if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLoss) {
          std::ostringstream msg;
          msg << "loss " << lg.loss << " at iteration " << iteration + 1;
          abort_run(msg.str());
          break;
        }
        loss_sum += lg.loss;
        ++loss_count;

        const double lr = opt.lr();
        if (cfg.lyapunov.method == LeMethod::two_trajectory) {
          const auto g_nominal =
              gamma_le == gamma_step ? lg.grad : grad(spec, params, batch, gamma_le);
          const auto g_perturbed = grad(spec, params + pert.delta, batch, gamma_le);
          pert = propagate_difference(std::move(pert), g_nominal, g_perturbed, lr);
        } else {
          const auto hv = hvp(spec, params, batch, pert.delta, gamma_le, cfg.lyapunov.fd_step);
          pert = propagate_tangent(std::move(pert), hv, lr);
        }
        if (pert.merged) result.le_merged = true;

        std::optional<double> le_now = tracker.after_step(pert);
        // A collapsed perturbation carries no rate information for the lr rule.
        if (le_now && !std::isfinite(*le_now)) le_now.reset();

        opt.step(params, lg.grad, le_now);
        ++iteration;

        if (cfg.verbose) {
          IterationRow it;
          it.epoch = epoch;
          it.iteration = iteration;
          it.loss = lg.loss;
          it.lr = opt.lr();
          it.le_running = le_estimate(pert, cfg.lyapunov.method).value;
          it.renorm_count = pert.renorm_count;
          result.iterations.push_back(it);
        }
      } catch (const NumericalError& e) {
        abort_run(e.what());
        break;
      }
    }
    if (result.status != RunStatus::completed) break;

    MetricsRow row;
    row.epoch = epoch;
    row.iteration = iteration;
    row.train_loss = loss_sum / static_cast<double>(std::max<std::int64_t>(loss_count, 1));
    row.lr = opt.lr();
    row.le = tracker.last_le ? *tracker.last_le
                             : (pert.steps > 0 ? le_estimate(pert, cfg.lyapunov.method).value : 0.0);
    row.delta_le = tracker.last_delta;
    row.renorm_count = pert.renorm_count;
    for (const auto& t : suite.targets) row.target_accuracy.push_back(evaluate(spec, params, t));
    result.rows.push_back(std::move(row));
  }

  result.params = params;
  result.lr_history = opt.lr_history();
  result.floor_hits = opt.floor_hits();
  return result;
}

RunResult run_quadratic_fixture(const SymmetricMatrix& a, const ParamVector& theta0, double lr,
                                int epochs, int steps_per_epoch, std::uint64_t seed) {
  if (theta0.dim() != a.dim()) throw std::invalid_argument("run_quadratic_fixture: dim mismatch");
  if (epochs < 0 || steps_per_epoch < 1) {
    throw std::invalid_argument("run_quadratic_fixture: bad epoch counts");
  }
  RunResult result;
  ParamVector theta = theta0;
  PerturbationState pert = init_perturbation(a.dim(), 1e-6, seed);
  LeWindowTracker tracker;
  tracker.window = steps_per_epoch;
  tracker.restart(pert);
  std::int64_t iteration = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    for (int s = 0; s < steps_per_epoch; ++s) {
      pert = propagate_tangent(std::move(pert), a.apply(pert.delta), lr);
      tracker.after_step(pert);
      axpy(-lr, qgrad(a, theta), theta);
      ++iteration;
    }
    MetricsRow row;
    row.epoch = epoch;
    row.iteration = iteration;
    row.train_loss = qloss(a, theta);
    row.lr = lr;
    row.le = tracker.last_le.value_or(0.0);
    row.delta_le = tracker.last_delta;
    row.renorm_count = pert.renorm_count;
    result.rows.push_back(row);
  }
  result.params = theta;
  result.lr_history = {{0, lr}};
  return result;
}

// ---------------------------------------------------------------------------

OptimizerChoice OptimizerChoice::parse(const std::string& text) {
  OptimizerChoice c;
  const auto colon = text.find(':');
  c.kind = parse_optimizer_kind(text.substr(0, colon));
  if (colon != std::string::npos) {
    const std::string lr_text = text.substr(colon + 1);
    double lr = 0.0;
    const auto res = std::from_chars(lr_text.data(), lr_text.data() + lr_text.size(), lr);
    if (res.ec != std::errc() || res.ptr != lr_text.data() + lr_text.size() || !(lr > 0.0)) {
      throw std::invalid_argument("bad learning rate in optimizer choice '" + text + "'");
    }
    c.lr = lr;
  }
  return c;
}

std::string OptimizerChoice::label() const {
  if (std::isnan(lr)) return to_string(kind);
  std::ostringstream s;
  s << to_string(kind) << ':' << lr;
  return s.str();
}

MeanStd mean_and_stddev(std::span<const double> values) {
  MeanStd out;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    const double delta = v - out.mean;
    out.mean += delta / static_cast<double>(n);
    m2 += delta * (v - out.mean);
  }
  out.stddev = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  return out;
}

ComparisonTable run_comparison(const ExperimentConfig& base,
                               std::span<const OptimizerChoice> optimizers,
                               std::span<const std::uint64_t> seeds) {
  if (optimizers.empty() || seeds.empty()) {
    throw std::invalid_argument("run_comparison: optimizer and seed lists must be non-empty");
  }
  base.validate();

  ComparisonTable table;
  for (const auto& t : base.domains.targets) table.target_tags.push_back(t.tag);
  const std::size_t n_cells = optimizers.size() * seeds.size();
  table.cells.resize(n_cells);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto& choice = optimizers[c / seeds.size()];
    ExperimentConfig cfg = base;
    cfg.optimizer.kind = choice.kind;
    if (!std::isnan(choice.lr)) cfg.optimizer.lr = choice.lr;
    cfg.seed = seeds[c % seeds.size()];
    cfg.verbose = false;

    ComparisonCell cell;
    cell.optimizer = choice.label();
    cell.seed = cfg.seed;
    try {
      const auto r = run_training(cfg);
      cell.status = r.status;
      cell.message = r.message;
      if (r.status == RunStatus::completed && !r.rows.empty()) {
        cell.target_accuracy = r.rows.back().target_accuracy;
        cell.mean_accuracy = r.final_mean_accuracy();
      }
      for (const auto& row : r.rows) cell.le_by_epoch.push_back(row.le);
    } catch (const std::exception& e) {
      cell.status = RunStatus::diverged;
      cell.message = e.what();
    }
    table.cells[c] = std::move(cell);
  }

  for (std::size_t o = 0; o < optimizers.size(); ++o) {
    const std::string name = optimizers[o].label();
    const std::size_t n_targets = table.target_tags.size();
    for (std::size_t t = 0; t <= n_targets; ++t) {
      ComparisonRow row;
      row.optimizer = name;
      row.target = t < n_targets ? table.target_tags[t] : "avg";
      std::vector<double> values;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const auto& cell = table.cells[o * seeds.size() + s];
        if (cell.status != RunStatus::completed) {
          ++row.aborted;
          continue;
        }
        values.push_back(t < n_targets ? cell.target_accuracy[t] : cell.mean_accuracy);
      }
      row.completed = values.size();
      const auto ms = mean_and_stddev(values);
      row.mean = ms.mean;
      row.stddev = ms.stddev;
      table.rows.push_back(row);
    }
  }
  return table;
}

std::string ComparisonTable::format() const {
  std::ostringstream out;
  out << std::left << std::setw(16) << "optimizer";
  for (const auto& t : target_tags) out << std::setw(18) << t;
  out << std::setw(18) << "avg" << "runs\n";
  const std::size_t per = target_tags.size() + 1;
  for (std::size_t r = 0; r + per <= rows.size(); r += per) {
    out << std::setw(16) << rows[r].optimizer;
    for (std::size_t k = 0; k < per; ++k) {
      const auto& row = rows[r + k];
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << 100.0 * row.mean << " ± " << 100.0 * row.stddev;
      // setw counts bytes; "±" is two bytes in UTF-8.
      out << std::setw(19) << cell.str();
    }
    out << rows[r].completed << " ok";
    if (rows[r].aborted > 0) out << ", " << rows[r].aborted << " aborted";
    out << '\n';
  }
  for (const auto& c : cells) {
    if (c.status != RunStatus::completed) {
      out << "aborted: " << c.optimizer << " seed " << c.seed << ": " << c.message << '\n';
    }
  }
  return out.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void emit_metrics(const RunResult& result, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "epoch,iteration,train_loss,lr,le,delta_le,renorm_count";
  for (const auto& t : result.target_tags) out << ",acc_" << t;
  out << '\n';
  for (const auto& r : result.rows) {
    out << r.epoch << ',' << r.iteration << ',' << format_double(r.train_loss) << ','
        << format_double(r.lr) << ',' << format_double(r.le) << ',' << format_double(r.delta_le)
        << ',' << r.renorm_count;
    for (double a : r.target_accuracy) out << ',' << format_double(a);
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void emit_plot_data(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto le = open_for_write(dir / "le_vs_epoch.csv");
  auto lr = open_for_write(dir / "lr_vs_epoch.csv");
  le << "epoch,le\n";
  lr << "epoch,lr\n";
  for (const auto& r : result.rows) {
    le << r.epoch << ',' << format_double(r.le) << '\n';
    lr << r.epoch << ',' << format_double(r.lr) << '\n';
  }
}

void emit_iterations(const RunResult& result, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "epoch,iteration,loss,lr,le_running,renorm_count\n";
  for (const auto& r : result.iterations) {
    out << r.epoch << ',' << r.iteration << ',' << format_double(r.loss) << ','
        << format_double(r.lr) << ',' << format_double(r.le_running) << ',' << r.renorm_count
        << '\n';
  }
}

void emit_lr_history(const RunResult& result, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "step,lr\n";
  for (const auto& c : result.lr_history) out << c.step << ',' << format_double(c.lr) << '\n';
}

void emit_comparison(const ComparisonTable& table, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "optimizer,target,mean,std,completed,aborted\n";
  for (const auto& r : table.rows) {
    out << r.optimizer << ',' << r.target << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << ',' << r.completed << ',' << r.aborted << '\n';
  }
}

}  // namespace leaware
