#pragma once

// Batch kernels behind the diffengine API. Two implementations of every
// kernel are kept:
//
//   kernels::    OpenMP-parallel over samples. Per-sample contributions are
//                written to private rows and reduced in sample order, so the
//                result is bit-identical to the serial path for any thread
//                count.
//   reference::  plain serial loops, one sample at a time. Kept as the
//                ground truth for tests and the benchmark baseline.
//
// Neither validates its arguments; callers go through diffengine.hpp.

#include <vector>

#include "leaware/diffengine.hpp"

namespace leaware {

namespace kernels {

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs);
Matrix features(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs);
/// Per-sample data losses (no regularizer).
std::vector<double> sample_losses(const ModelSpec& spec, const ParamVector& params,
                                  const Batch& batch);
/// Mean data loss and its gradient (no regularizer).
LossAndGrad data_loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                               const Batch& batch);

}  // namespace kernels

namespace reference {

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs);
Matrix features(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs);
std::vector<double> sample_losses(const ModelSpec& spec, const ParamVector& params,
                                  const Batch& batch);
LossAndGrad data_loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                               const Batch& batch);

}  // namespace reference

}  // namespace leaware
