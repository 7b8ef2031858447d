#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dtn/tape.hpp"

// Differentiable primitives. Each records one node on the tape of its
// first operand. Image tensors are NCHW.
namespace dtn::ops {

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Sum of all entries, shape [1].
Var sum(Var a);
Var relu(Var a);
Var tanh(Var a);

/// Collapses every axis after the first: [N, ...] -> [N, rest].
Var flatten(Var a);
/// Selects rows (first-axis slices) in the given order; repeats allowed.
Var gather_rows(Var a, std::span<const std::size_t> rows);

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output side for a conv/pool window. Throws ShapeError when the window does
/// not fit.
std::size_t conv_output_side(std::size_t input, std::size_t kernel, std::size_t stride,
                             std::size_t padding);

/// Cross-correlation (no kernel flip). input [N,C,H,W], weights [O,C,k,k],
/// optional bias [O].
Var conv2d(Var input, Var weights, std::optional<Var> bias, ConvGeometry geometry);

/// Per-window maximum. Backward routes to the first maximum in row-major order.
Var maxpool2d(Var input, std::size_t window, std::size_t stride);

enum class Mode { Train, Eval };

struct BatchNormStats {
  Tensor mean;  // [C]
  Tensor var;   // [C]

  friend bool operator==(const BatchNormStats&, const BatchNormStats&) = default;
};

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.9;  // weight kept on the previous running value
};

/// Per-channel batch normalization. Train mode normalizes with batch
/// statistics and, when `running` is non-null, folds them into the running
/// estimates. Eval mode normalizes with `stats`.
Var batchnorm2d(Var input, Var gamma, Var beta, Mode mode, const BatchNormStats& stats,
                BatchNormStats* running, BatchNormOptions options = {});

/// y = x W + b with x [N,in], W [in,out], b [out].
Var dense(Var input, Var weights, Var bias);

/// Mean over rows of -log softmax(logits)[label]. logits [N,C].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

/// Row-wise softmax of a [N,C] tensor (not differentiable).
Tensor softmax_rows(const Tensor& logits);

}  // namespace dtn::ops
