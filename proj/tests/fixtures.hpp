#pragma once

#include <random>
#include <string>
#include <vector>

#include "dtn/kernel_mmd.hpp"
#include "dtn/objectives.hpp"
#include "dtn/synthetic.hpp"
#include "test_util.hpp"

namespace dtn::testing {

/// Two-Half batch with the given per-row modalities on each side.
inline DomainBatch make_batch(const std::vector<std::string>& source_mods,
                              const std::vector<std::string>& target_mods, std::size_t side,
                              std::mt19937_64& rng) {
  DomainBatch b;
  b.source_images = random_tensor({source_mods.size(), 1, side, side}, rng, 0.0, 1.0);
  b.target_images = random_tensor({target_mods.size(), 1, side, side}, rng, 0.0, 1.0);
  b.source_modalities = source_mods;
  b.target_modalities = target_mods;
  for (const auto& m : source_mods) b.source_labels.push_back(m == "real" ? kGenuineClass : kFakeClass);
  for (const auto& m : target_mods) b.target_labels.push_back(m == "real" ? kGenuineClass : kFakeClass);
  return b;
}

/// Desk architecture on side x side inputs.
inline ArchitectureConfig small_arch(std::size_t side) {
  ArchitectureConfig a = ArchitectureConfig::desk();
  a.input_side = side;
  return a;
}

/// Default benchmark with fewer subjects, for quick training runs.
inline SyntheticSpec small_spec(std::uint64_t seed = 1) {
  SyntheticSpec s = SyntheticSpec::defaults();
  s.seed = seed;
  s.source.train_subjects = 6;
  s.source.devel_subjects = 2;
  s.source.test_subjects = 4;
  s.target.train_subjects = 3;
  s.target.devel_subjects = 3;
  s.target.test_subjects = 3;
  s.frames_per_video = 2;
  return s;
}

/// Same sums assembled from independent module-level calls.
struct Assembled {
  double classification;
  std::vector<double> terms;
};

inline Assembled assemble(const ModelParams& params, const DomainBatch& batch,
                   const std::vector<std::vector<std::size_t>>* src_cells,
                   const std::vector<std::vector<std::size_t>>* tgt_cells, const KernelSpec& kernel) {
  Tape tape;
  const BoundModel model = bind(tape, params);
  const Var phi = forward_features(model, tape.constant(batch.stacked_images()), ops::Mode::Train);
  const std::size_t h = batch.half(), f = phi.shape()[1];
  const auto& all = phi.value().values();
  auto rows = [&](const std::vector<std::size_t>& idx, std::size_t offset) {
    std::vector<double> v;
    for (std::size_t i : idx) v.insert(v.end(), all.begin() + (offset + i) * f, all.begin() + (offset + i + 1) * f);
    return Tensor({idx.size(), f}, v);
  };
  std::vector<std::size_t> everyone(h);
  for (std::size_t i = 0; i < h; ++i) everyone[i] = i;
  const Tensor src = rows(everyone, 0);
  Tape head_tape;
  const BoundModel head = bind(head_tape, params);
  const Var logits = forward_head(head, head_tape.constant(src));
  Assembled out{ops::softmax_cross_entropy(logits, batch.source_labels).value().item(), {}};
  if (!src_cells) {
    out.terms.push_back(mmd2_biased(src, rows(everyone, h), kernel));
  } else {
    for (std::size_t c = 0; c < src_cells->size(); ++c) {
      out.terms.push_back(mmd2_biased(rows((*src_cells)[c], 0), rows((*tgt_cells)[c], h), kernel));
    }
  }
  return out;
}

}  // namespace dtn::testing
