#include "dtn/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dtn {

namespace {

int class_of(Label l) { return l == Label::Genuine ? kGenuineClass : kFakeClass; }

std::vector<std::size_t> iota(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(i);
  return out;
}

std::vector<std::vector<std::size_t>> strata_of(const Dataset& d) {
  std::vector<std::vector<std::size_t>> out(d.modalities().size());
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < d.modalities().size(); ++i) slot[d.modalities()[i]] = i;
  for (std::size_t r = 0; r < d.size(); ++r) out.at(slot.at(d.row(r).modality)).push_back(r);
  return out;
}

void append_rows(const Dataset& d, const std::vector<std::size_t>& rows, Tensor& images,
                 std::vector<int>& labels, std::vector<std::string>& modalities) {
  images = d.images(rows);
  for (std::size_t r : rows) {
    labels.push_back(class_of(d.row(r).label));
    modalities.push_back(d.row(r).modality);
  }
}

Var scaled_sum(Var classification, const std::vector<Var>& terms, double lambda) {
  if (terms.empty()) return classification;
  Var domain = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) domain = ops::add(domain, terms[i]);
  return ops::add(classification, ops::scale(domain, lambda));
}

struct JointForward {
  Var source_features;
  Var target_features;
  Var classification;
};

JointForward joint_forward(const BoundModel& model, const DomainBatch& batch,
                           std::vector<ops::BatchNormStats>* running_update) {
  if (!batch.has_target() || batch.target_labels.size() != batch.half()) {
    throw ShapeError("joint loss needs equal source and target halves");
  }
  Tape& tape = *model.vars.front().tape;
  const std::size_t h = batch.half();
  const Var input = tape.constant(batch.stacked_images());
  const Var features = forward_features(model, input, ops::Mode::Train, running_update);
  const auto src = iota(0, h), tgt = iota(h, 2 * h);
  JointForward out;
  out.source_features = ops::gather_rows(features, src);
  out.target_features = ops::gather_rows(features, tgt);
  out.classification = ops::softmax_cross_entropy(forward_head(model, out.source_features),
                                                  batch.source_labels);
  return out;
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and non-negative");
  }
}

}  // namespace

Tensor DomainBatch::stacked_images() const {
  if (!has_target()) return source_images;
  Shape shape = source_images.shape();
  shape[0] += target_images.dim(0);
  std::vector<double> values(source_images.values());
  values.insert(values.end(), target_images.values().begin(), target_images.values().end());
  return Tensor(std::move(shape), std::move(values));
}

ModalityPartition ModalityPartition::of(const DomainBatch& batch,
                                        const std::vector<std::string>& modalities) {
  ModalityPartition p;
  p.names = modalities;
  p.source.resize(modalities.size());
  p.target.resize(modalities.size());
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < modalities.size(); ++i) slot[modalities[i]] = i;
  auto place = [&](const std::vector<std::string>& mods, std::vector<std::vector<std::size_t>>& cells,
                   const char* side) {
    for (std::size_t r = 0; r < mods.size(); ++r) {
      const auto it = slot.find(mods[r]);
      if (it == slot.end()) {
        throw ProtocolError(std::string(side) + " row has undeclared modality '" + mods[r] + "'");
      }
      cells[it->second].push_back(r);
    }
  };
  place(batch.source_modalities, p.source, "source");
  place(batch.target_modalities, p.target, "target");
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (p.source[i].empty() || p.target[i].empty()) {
      throw ProtocolError("modality '" + modalities[i] + "' has no " +
                          (p.source[i].empty() ? "source" : "target") + " samples in the batch");
    }
  }
  return p;
}

TwoHalfSampler::TwoHalfSampler(const Dataset& source, const Dataset& target, std::size_t half,
                               TargetSampling sampling, std::uint64_t seed)
    : source_(&source), target_(&target), half_(half), sampling_(sampling) {
  if (half == 0) throw std::invalid_argument("half batch must be positive");
  if (source.empty()) throw ProtocolError("source dataset is empty");
  std::seed_seq s_seed{seed, std::uint64_t{1}};
  std::seed_seq t_seed{seed, std::uint64_t{2}};
  source_rng_.seed(s_seed);
  target_rng_.seed(t_seed);
  for (auto& rows : strata_of(source)) {
    if (rows.empty()) continue;
    std::shuffle(rows.begin(), rows.end(), source_rng_);
    source_strata_.push_back({std::move(rows), 0});
  }
  if (sampling == TargetSampling::None) return;
  if (target.empty()) throw ProtocolError("target pool is empty");
  if (sampling == TargetSampling::Uniform) {
    target_strata_.push_back(iota(0, target.size()));
    return;
  }
  target_strata_ = strata_of(target);
  for (std::size_t i = 0; i < target_strata_.size(); ++i) {
    if (target_strata_[i].empty()) {
      throw ProtocolError("target pool has no samples of modality '" + target.modalities()[i] + "'");
    }
  }
}

std::vector<std::size_t> TwoHalfSampler::quotas(std::size_t cells) const {
  std::vector<std::size_t> q(cells, half_ / cells);
  for (std::size_t i = 0; i < half_ % cells; ++i) ++q[i];
  return q;
}

std::size_t TwoHalfSampler::batches_per_epoch() const {
  return (source_->size() + half_ - 1) / half_;
}

DomainBatch TwoHalfSampler::next() {
  DomainBatch b;
  std::vector<std::size_t> rows;
  const auto sq = quotas(source_strata_.size());
  for (std::size_t c = 0; c < source_strata_.size(); ++c) {
    Stratum& s = source_strata_[c];
    for (std::size_t k = 0; k < sq[c]; ++k) {
      if (s.cursor == s.rows.size()) {
        std::shuffle(s.rows.begin(), s.rows.end(), source_rng_);
        s.cursor = 0;
      }
      rows.push_back(s.rows[s.cursor++]);
    }
  }
  append_rows(*source_, rows, b.source_images, b.source_labels, b.source_modalities);
  if (sampling_ == TargetSampling::None) return b;

  rows.clear();
  const auto tq = quotas(target_strata_.size());
  for (std::size_t c = 0; c < target_strata_.size(); ++c) {
    const auto& pool = target_strata_[c];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = 0; k < tq[c]; ++k) rows.push_back(pool[pick(target_rng_)]);
  }
  append_rows(*target_, rows, b.target_images, b.target_labels, b.target_modalities);
  return b;
}

LossTerms loss_classification(const BoundModel& model, const DomainBatch& batch,
                              std::vector<ops::BatchNormStats>* running_update) {
  Tape& tape = *model.vars.front().tape;
  const Var input = tape.constant(batch.source_images);
  const Var logits = forward_logits(model, input, ops::Mode::Train, running_update);
  LossTerms out;
  out.classification = ops::softmax_cross_entropy(logits, batch.source_labels);
  out.total = out.classification;
  return out;
}

LossTerms loss_unsupervised(const BoundModel& model, const DomainBatch& batch,
                            const KernelSpec& kernel, double lambda,
                            std::vector<ops::BatchNormStats>* running_update) {
  check_lambda(lambda);
  const JointForward f = joint_forward(model, batch, running_update);
  LossTerms out;
  out.classification = f.classification;
  out.domain_names = {"domain"};
  out.domain_terms = {mmd2(f.source_features, f.target_features, kernel, Estimator::Biased)};
  out.total = scaled_sum(out.classification, out.domain_terms, lambda);
  return out;
}

LossTerms loss_semisupervised(const BoundModel& model, const DomainBatch& batch,
                              const ModalityPartition& partition, const KernelSpec& kernel,
                              double lambda, std::vector<ops::BatchNormStats>* running_update) {
  check_lambda(lambda);
  const JointForward f = joint_forward(model, batch, running_update);
  LossTerms out;
  out.classification = f.classification;
  out.domain_names = partition.names;
  for (std::size_t i = 0; i < partition.names.size(); ++i) {
    if (partition.source[i].empty() || partition.target[i].empty()) {
      throw ProtocolError("empty partition cell for modality '" + partition.names[i] + "'");
    }
    out.domain_terms.push_back(mmd2(ops::gather_rows(f.source_features, partition.source[i]),
                                    ops::gather_rows(f.target_features, partition.target[i]),
                                    kernel, Estimator::Biased));
  }
  out.total = scaled_sum(out.classification, out.domain_terms, lambda);
  return out;
}

}  // namespace dtn
