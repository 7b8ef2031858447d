#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"
#include "dtn/kernel_mmd.hpp"
#include "dtn/model.hpp"

namespace dtn {

/// Two-Half batch: source rows first, then an equal number of target rows.
struct DomainBatch {
  Tensor source_images;  // [h, C, H, W]
  std::vector<int> source_labels;
  std::vector<std::string> source_modalities;
  Tensor target_images;  // [h, C, H, W], may be absent (source-only batch)
  std::vector<int> target_labels;
  std::vector<std::string> target_modalities;

  std::size_t half() const { return source_labels.size(); }
  bool has_target() const { return !target_labels.empty(); }
  /// Source images stacked over target images, [2h, C, H, W].
  Tensor stacked_images() const;
};

/// Per cell (real first, then each spoof modality): row indices into the
/// source and target halves.
struct ModalityPartition {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> source;
  std::vector<std::vector<std::size_t>> target;

  /// Throws ProtocolError naming the first modality with an empty side.
  static ModalityPartition of(const DomainBatch& batch, const std::vector<std::string>& modalities);
};

enum class TargetSampling {
  None,        // source-only batches
  Uniform,     // label-blind draws with replacement
  Stratified,  // per-modality quotas, draws with replacement
};

/// Emits Two-Half batches. The source side cycles through per-modality
/// queues reshuffled on exhaustion, with quotas half/cells (remainder to
/// the first cells). Source and target use independent streams derived
/// from `seed`, so the source sequence does not depend on the target side.
class TwoHalfSampler {
 public:
  TwoHalfSampler(const Dataset& source, const Dataset& target, std::size_t half,
                 TargetSampling sampling, std::uint64_t seed);

  DomainBatch next();
  /// ceil(|source| / half)
  std::size_t batches_per_epoch() const;
  std::size_t half() const { return half_; }

 private:
  struct Stratum {
    std::vector<std::size_t> rows;
    std::size_t cursor = 0;
  };
  std::vector<std::size_t> quotas(std::size_t cells) const;

  const Dataset* source_;
  const Dataset* target_;
  std::size_t half_;
  TargetSampling sampling_;
  std::mt19937_64 source_rng_;
  std::mt19937_64 target_rng_;
  std::vector<Stratum> source_strata_;
  std::vector<std::vector<std::size_t>> target_strata_;
};

/// A joint loss and its parts, all on the same tape.
struct LossTerms {
  Var total;
  Var classification;
  std::vector<std::string> domain_names;
  std::vector<Var> domain_terms;
};

/// L_C over the source half only. Batch norm sees the source half alone.
LossTerms loss_classification(const BoundModel& model, const DomainBatch& batch,
                              std::vector<ops::BatchNormStats>* running_update = nullptr);

/// L_C(X_S, y) + lambda * MMD^2(phi(X_S), phi(X_T)), biased estimator.
/// One forward pass over both halves; target labels are unused.
LossTerms loss_unsupervised(const BoundModel& model, const DomainBatch& batch,
                            const KernelSpec& kernel, double lambda,
                            std::vector<ops::BatchNormStats>* running_update = nullptr);

/// L_C(X_S, y) + lambda * sum over partition cells of the biased MMD^2
/// between matching source and target features (not averaged over cells).
LossTerms loss_semisupervised(const BoundModel& model, const DomainBatch& batch,
                              const ModalityPartition& partition, const KernelSpec& kernel,
                              double lambda,
                              std::vector<ops::BatchNormStats>* running_update = nullptr);

}  // namespace dtn
