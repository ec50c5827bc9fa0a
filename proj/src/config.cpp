#include "leaware/config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "leaware/errors.hpp"

namespace leaware {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!it->is_array()) throw ConfigError("");
      for (const auto& e : *it) {
        if (!e.is_number_unsigned()) throw ConfigError("");
      }
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <class Fn>
auto parse_enum(const json& obj, const char* key, const std::string& where, Fn parse,
                decltype(parse(std::string{})) fallback) {
  std::string text;
  read(obj, key, text, where);
  if (text.empty()) return fallback;
  try {
    return parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

double to_degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

void parse_model(const json& j, ModelSpec& m) {
  reject_unknown(j, "model", {"layers", "activation", "output"});
  read(j, "layers", m.layer_sizes, "model");
  m.activation = parse_enum(j, "activation", "model", parse_activation, m.activation);
  m.output = parse_enum(j, "output", "model", parse_output, m.output);
}

void parse_optimizer(const json& j, OptimizerConfig& o) {
  const std::string w = "optimizer";
  reject_unknown(j, w,
                 {"kind", "lr", "momentum", "weight_decay", "beta", "lr_floor", "le_window",
                  "delta_mag", "adam_beta1", "adam_beta2", "eps", "rho"});
  o.kind = parse_enum(j, "kind", w, parse_optimizer_kind, o.kind);
  read(j, "lr", o.lr, w);
  read(j, "momentum", o.momentum, w);
  read(j, "weight_decay", o.weight_decay, w);
  read(j, "beta", o.beta, w);
  read(j, "lr_floor", o.lr_floor, w);
  read(j, "le_window", o.le_window, w);
  read(j, "delta_mag", o.delta_mag, w);
  read(j, "adam_beta1", o.adam_beta1, w);
  read(j, "adam_beta2", o.adam_beta2, w);
  read(j, "eps", o.eps, w);
  read(j, "rho", o.rho, w);
}

void parse_lyapunov(const json& j, LyapunovSettings& l) {
  reject_unknown(j, "lyapunov", {"method", "fd_step", "reset_per_epoch"});
  l.method = parse_enum(j, "method", "lyapunov", parse_le_method, l.method);
  read(j, "fd_step", l.fd_step, "lyapunov");
  read(j, "reset_per_epoch", l.reset_per_epoch, "lyapunov");
}

void parse_aug(const json& j, AugConfig& a) {
  const std::string w = "aug";
  reject_unknown(j, w,
                 {"lambda", "ascent_steps", "ascent_lr", "samples_per_input", "fd_step",
                  "max_halvings"});
  read(j, "lambda", a.lambda, w);
  read(j, "ascent_steps", a.ascent_steps, w);
  read(j, "ascent_lr", a.ascent_lr, w);
  read(j, "samples_per_input", a.samples_per_input, w);
  read(j, "fd_step", a.fd_step, w);
  read(j, "max_halvings", a.max_halvings, w);
}

void parse_domains(const json& j, DomainSuiteSpec& d) {
  reject_unknown(j, "domains", {"source", "targets"});
  if (const auto it = j.find("source"); it != j.end()) {
    const std::string w = "domains.source";
    reject_unknown(*it, w, {"kind", "n", "noise", "classes", "spread"});
    read(*it, "kind", d.source.kind, w);
    read(*it, "n", d.source.n, w);
    read(*it, "noise", d.source.noise, w);
    read(*it, "classes", d.source.classes, w);
    read(*it, "spread", d.source.spread, w);
  }
  if (const auto it = j.find("targets"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("domains.targets must be an array");
    d.targets.clear();
    for (std::size_t k = 0; k < it->size(); ++k) {
      const auto& t = (*it)[k];
      const std::string w = "domains.targets[" + std::to_string(k) + "]";
      reject_unknown(t, w, {"tag", "rotation_deg", "translation", "scale", "noise"});
      TargetSpec spec;
      read(t, "tag", spec.tag, w);
      double deg = 0.0;
      read(t, "rotation_deg", deg, w);
      spec.shift.rotation = to_radians(deg);
      read(t, "translation", spec.shift.translation, w);
      read(t, "scale", spec.shift.scale, w);
      read(t, "noise", spec.shift.noise, w);
      d.targets.push_back(std::move(spec));
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  reject_unknown(j, "config",
                 {"model", "optimizer", "lyapunov", "aug", "domains", "epochs", "batch_size",
                  "seed", "data_fraction", "output_dir", "verbose"});
  try {
    if (j.contains("model")) parse_model(j["model"], cfg.model);
  } catch (const json::exception&) {
    throw ConfigError("model.layers must be a list of positive integers");
  }
  if (j.contains("optimizer")) parse_optimizer(j["optimizer"], cfg.optimizer);
  if (j.contains("lyapunov")) parse_lyapunov(j["lyapunov"], cfg.lyapunov);
  if (j.contains("aug")) {
    if (j["aug"].is_null()) {
      cfg.aug_enabled = false;
    } else {
      parse_aug(j["aug"], cfg.aug);
    }
  }
  if (j.contains("domains")) parse_domains(j["domains"], cfg.domains);
  read(j, "epochs", cfg.epochs, "config");
  read(j, "batch_size", cfg.batch_size, "config");
  read(j, "seed", cfg.seed, "config");
  read(j, "data_fraction", cfg.data_fraction, "config");
  read(j, "output_dir", cfg.output_dir, "config");
  read(j, "verbose", cfg.verbose, "config");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  json j;
  j["model"] = {{"layers", cfg.model.layer_sizes},
                {"activation", to_string(cfg.model.activation)},
                {"output", to_string(cfg.model.output)}};
  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"kind", to_string(o.kind)},   {"lr", o.lr},
                    {"momentum", o.momentum},      {"weight_decay", o.weight_decay},
                    {"beta", o.beta},              {"lr_floor", o.lr_floor},
                    {"le_window", o.le_window},    {"delta_mag", o.delta_mag},
                    {"adam_beta1", o.adam_beta1},  {"adam_beta2", o.adam_beta2},
                    {"eps", o.eps},                {"rho", o.rho}};
  j["lyapunov"] = {{"method", to_string(cfg.lyapunov.method)},
                   {"fd_step", cfg.lyapunov.fd_step},
                   {"reset_per_epoch", cfg.lyapunov.reset_per_epoch}};
  if (cfg.aug_enabled) {
    const auto& a = cfg.aug;
    j["aug"] = {{"lambda", a.lambda},
                {"ascent_steps", a.ascent_steps},
                {"ascent_lr", a.ascent_lr},
                {"samples_per_input", a.samples_per_input},
                {"fd_step", a.fd_step},
                {"max_halvings", a.max_halvings}};
  } else {
    j["aug"] = nullptr;
  }
  const auto& s = cfg.domains.source;
  j["domains"]["source"] = {{"kind", s.kind},
                            {"n", s.n},
                            {"noise", s.noise},
                            {"classes", s.classes},
                            {"spread", s.spread}};
  j["domains"]["targets"] = json::array();
  for (const auto& t : cfg.domains.targets) {
    j["domains"]["targets"].push_back({{"tag", t.tag},
                                       {"rotation_deg", to_degrees(t.shift.rotation)},
                                       {"translation", t.shift.translation},
                                       {"scale", t.shift.scale},
                                       {"noise", t.shift.noise}});
  }
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["data_fraction"] = cfg.data_fraction;
  j["output_dir"] = cfg.output_dir;
  j["verbose"] = cfg.verbose;
  return j.dump(2) + "\n";
}

}  // namespace leaware
