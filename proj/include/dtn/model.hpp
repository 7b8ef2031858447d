#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtn/ops.hpp"
#include "dtn/tape.hpp"

namespace dtn {

/// Class indices of the two-way head.
inline constexpr int kFakeClass = 0;
inline constexpr int kGenuineClass = 1;

/// conv -> [batchnorm] -> relu -> maxpool
struct ConvStage {
  std::size_t out_channels = 8;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  bool batchnorm = true;
  std::size_t pool_window = 2;
  std::size_t pool_stride = 2;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

struct ArchitectureConfig {
  std::size_t input_side = 16;
  std::size_t input_channels = 1;
  std::vector<ConvStage> stages;
  /// Widths of the hidden dense layers; the class layer follows them.
  std::vector<std::size_t> hidden;
  std::size_t classes = 2;

  /// 16x16 grayscale, conv8 and conv16 stages, dense 32 -> 2.
  static ArchitectureConfig desk();
  /// Five conv+pool stages and three dense layers on 224x224 RGB.
  static ArchitectureConfig alexnet_shape();

  /// Throws std::invalid_argument naming the first broken layer.
  void validate() const;
  /// Spatial side after each stage's pooling.
  std::vector<std::size_t> stage_sides() const;
  /// Width of the flattened last-pool activations.
  std::size_t feature_width() const;
  std::size_t dense_layers() const { return hidden.size() + 1; }

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

/// Learnable tensors in a fixed order plus batch-norm running statistics.
struct ModelParams {
  ArchitectureConfig config;
  std::vector<std::string> names;
  std::vector<Tensor> learnable;
  /// One entry per stage; unused for stages without batch norm.
  std::vector<ops::BatchNormStats> running;

  std::size_t parameter_count() const;
  const Tensor& at(const std::string& name) const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Fan-in scaled uniform weights, zero biases, unit gamma, zero beta.
/// Deterministic in `seed`.
ModelParams build_model(const ArchitectureConfig& config, std::uint64_t seed);

/// Learnable tensors registered as differentiable leaves on one tape.
struct BoundModel {
  const ModelParams* params = nullptr;
  std::vector<Var> vars;
};

BoundModel bind(Tape& tape, const ModelParams& params);

/// Flattened activations of the last pooling layer, [N, feature_width].
/// In train mode with `running_update` set, the updated batch-norm
/// statistics are written there. `stage_outputs`, when given, receives the
/// pooled output of every stage.
Var forward_features(const BoundModel& model, Var batch, ops::Mode mode,
                     std::vector<ops::BatchNormStats>* running_update = nullptr,
                     std::vector<Var>* stage_outputs = nullptr);

/// Dense head over features: relu between hidden layers, raw logits out.
Var forward_head(const BoundModel& model, Var features);

Var forward_logits(const BoundModel& model, Var batch, ops::Mode mode,
                   std::vector<ops::BatchNormStats>* running_update = nullptr);

/// Eval-mode features for a batch of images, [N, feature_width].
Tensor extract_features(const ModelParams& params, const Tensor& images);
/// Eval-mode softmax probability of the genuine class per image.
std::vector<double> genuine_probability(const ModelParams& params, const Tensor& images);

/// Checkpoint: a text header ("dtn-checkpoint 1", architecture lines, one
/// "tensor <name> <rank> <dims...>" line per tensor, "end") followed by the
/// tensors as raw little-endian IEEE-754 doubles in header order.
void save_checkpoint(const ModelParams& params, std::ostream& out);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(std::istream& in);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dtn
