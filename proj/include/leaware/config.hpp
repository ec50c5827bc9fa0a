#pragma once

#include <filesystem>
#include <string>

#include "leaware/harness.hpp"

namespace leaware {

/// JSON experiment config. Every key is optional and falls back to the
/// ExperimentConfig defaults; unknown keys are rejected. Schema:
///
///   {
///     "model":     {"layers": [2, 16, 2], "activation": "tanh", "output": "softmax_ce"},
///     "optimizer": {"kind": "leaware", "lr": 0.05, "momentum": 0.9, "weight_decay": 5e-4,
///                   "beta": 0.1, "lr_floor": 1e-7, "le_window": 0, "delta_mag": 1e-6,
///                   "adam_beta1": 0.9, "adam_beta2": 0.999, "eps": 1e-8, "rho": 0.99},
///     "lyapunov":  {"method": "two_trajectory", "fd_step": 1e-4, "reset_per_epoch": false},
///     "aug":       {"lambda": 1.0, "ascent_steps": 10, "ascent_lr": 0.05,
///                   "samples_per_input": 1, "fd_step": 1e-4, "max_halvings": 5},
///     "domains":   {"source": {"kind": "two_moons", "n": 400, "noise": 0.1,
///                              "classes": 2, "spread": 0.3},
///                   "targets": [{"tag": "rot20", "rotation_deg": 20, "translation": [0, 0],
///                                "scale": 1.0, "noise": 0.2}, ...]},
///     "epochs": 30, "batch_size": 32, "seed": 0, "data_fraction": 1.0,
///     "output_dir": "out", "verbose": false
///   }
///
/// "aug": null disables augmentation. le_window 0 means one epoch.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config; every field is written out.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace leaware
