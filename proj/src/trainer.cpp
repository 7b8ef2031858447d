#include "dtn/trainer.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "dtn/adam.hpp"
#include "dtn/objectives.hpp"

namespace dtn {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::StdCnn: return "stdcnn";
    case Objective::Unsupervised: return "unsupervised";
    case Objective::Semisupervised: return "semisupervised";
  }
  return "?";
}

Objective parse_objective(std::string_view text) {
  if (text == "stdcnn") return Objective::StdCnn;
  if (text == "unsupervised") return Objective::Unsupervised;
  if (text == "semisupervised") return Objective::Semisupervised;
  throw std::invalid_argument("unknown objective '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 4 || batch_size % 2 != 0) {
    throw std::invalid_argument("batch size must be even and at least 4");
  }
  if (!std::isfinite(lambda) || lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive");
  }
  kernel.validate();
  architecture.validate();
}

namespace {

std::vector<std::string> term_names(const TrainConfig& c, const Dataset& source, bool joint) {
  if (!joint) return {};
  if (c.objective == Objective::Unsupervised) return {"domain"};
  return source.modalities();
}

}  // namespace

TrainResult train(const Dataset& source, const Dataset& target, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  if (source.empty()) throw ProtocolError("source training set is empty");
  if (source.side() != config.architecture.input_side) {
    throw ShapeError("dataset side " + std::to_string(source.side()) + " does not match model input " +
                     std::to_string(config.architecture.input_side));
  }
  const bool joint = config.objective != Objective::StdCnn && config.lambda > 0.0;
  if (joint && config.objective == Objective::Semisupervised &&
      target.modalities() != source.modalities()) {
    throw ProtocolError("source and target declare different modality sets");
  }
  const TargetSampling sampling = !joint ? TargetSampling::None
                                  : config.objective == Objective::Unsupervised
                                      ? TargetSampling::Uniform
                                      : TargetSampling::Stratified;
  TwoHalfSampler sampler(source, target, config.batch_size / 2, sampling, config.seed);

  TrainResult result;
  result.params = build_model(config.architecture, config.seed);
  AdamOptions adam;
  adam.lr = config.learning_rate;
  AdamState state = AdamState::for_params(result.params.learnable, adam);

  const std::vector<std::string> names = term_names(config, source, joint);
  if (hooks.log) {
    *hooks.log << "epoch\tbatch\tl_c";
    for (const auto& n : names) *hooks.log << "\tmmd_" << n;
    *hooks.log << "\ttotal\n";
  }
  const std::streamsize old_precision = hooks.log ? hooks.log->precision(17) : 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_sum = 0.0;
    const std::size_t batches = sampler.batches_per_epoch();
    for (std::size_t b = 1; b <= batches; ++b) {
      const DomainBatch batch = sampler.next();
      Tape tape;
      const BoundModel model = bind(tape, result.params);
      std::vector<ops::BatchNormStats> running = result.params.running;
      std::vector<Tensor> grads;
      LossTerms loss;
      try {
        if (!joint) {
          loss = loss_classification(model, batch, &running);
        } else if (config.objective == Objective::Unsupervised) {
          loss = loss_unsupervised(model, batch, config.kernel, config.lambda, &running);
        } else {
          loss = loss_semisupervised(model, batch, ModalityPartition::of(batch, source.modalities()),
                                     config.kernel, config.lambda, &running);
        }
        const Gradients g = tape.backward(loss.total);
        for (const Var& v : model.vars) grads.push_back(g.of(v));
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(b) + ": " + e.what());
      }
      adam_step(state, result.params.learnable, grads);
      result.params.running = std::move(running);
      ++result.steps;
      const double total = loss.total.value().item();
      epoch_sum += total;
      if (hooks.log) {
        *hooks.log << epoch << '\t' << b << '\t' << loss.classification.value().item();
        for (const Var& t : loss.domain_terms) *hooks.log << '\t' << t.value().item();
        *hooks.log << '\t' << total << '\n';
      }
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
    const bool periodic = hooks.checkpoint_every > 0 && epoch % hooks.checkpoint_every == 0;
    if (!hooks.checkpoint.empty() && (periodic || epoch == config.epochs)) {
      save_checkpoint(result.params, hooks.checkpoint);
    }
  }
  if (hooks.log) hooks.log->precision(old_precision);
  return result;
}

double frame_accuracy(const ModelParams& params, const Dataset& data) {
  if (data.empty()) throw ProtocolError("accuracy of an empty dataset");
  const std::vector<double> p = genuine_probability(params, data.all_images());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool genuine = data.row(i).label == Label::Genuine;
    if ((p[i] > 0.5) == genuine) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

}  // namespace dtn
