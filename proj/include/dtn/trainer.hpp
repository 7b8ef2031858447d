#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"
#include "dtn/kernel_mmd.hpp"
#include "dtn/model.hpp"

namespace dtn {

enum class Objective { StdCnn, Unsupervised, Semisupervised };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view text);

struct TrainConfig {
  Objective objective = Objective::Semisupervised;
  double lambda = 0.5;
  std::size_t batch_size = 32;  // source + target rows
  std::size_t epochs = 15;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  KernelSpec kernel;
  ArchitectureConfig architecture = ArchitectureConfig::desk();

  /// Throws std::invalid_argument: batch even and >= 4, lambda >= 0, ...
  void validate() const;
};

/// Optional outputs of a training run.
struct TrainHooks {
  /// Tab-separated log, one row per batch:
  ///   epoch  batch  l_c  mmd_<term>...  total
  /// preceded by a header row naming the columns.
  std::ostream* log = nullptr;
  /// Writes a checkpoint here after every `checkpoint_every` epochs and
  /// after the final epoch.
  std::filesystem::path checkpoint;
  std::size_t checkpoint_every = 0;
};

struct TrainResult {
  ModelParams params;
  /// Mean total loss per epoch.
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
};

/// Adam on the configured objective. StdCnn, and any objective with
/// lambda = 0, trains on source-only batches and ignores `target`.
/// Otherwise `target` is the (sparse) target pool of the Two-Half batches.
/// A non-finite loss or gradient aborts with the epoch and batch index.
TrainResult train(const Dataset& source, const Dataset& target, const TrainConfig& config,
                  const TrainHooks& hooks = {});

/// Fraction of frames whose argmax class matches the label (eval mode).
double frame_accuracy(const ModelParams& params, const Dataset& data);

}  // namespace dtn
