#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dtn/gradcheck.hpp"
#include "dtn/objectives.hpp"
#include "dtn/protocol.hpp"
#include "dtn/trainer.hpp"
#include "../fixtures.hpp"

using namespace dtn;
using namespace dtn::testing;

namespace {

const std::vector<std::string> kMods{"real", "print", "video"};

Dataset tagged_dataset(const std::vector<std::string>& mods, std::size_t per_modality,
                       const std::string& prefix, std::mt19937_64& rng, std::size_t side = 4) {
  Dataset d(kMods, side);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t n = 0;
  for (const auto& m : mods) {
    for (std::size_t i = 0; i < per_modality; ++i, ++n) {
      SampleRecord r;
      r.path = "x";
      r.modality = m;
      r.label = m == "real" ? Label::Genuine : Label::Fake;
      r.subject = prefix + std::to_string(i % 3);
      r.video = prefix + m + std::to_string(n);
      std::vector<double> px(side * side);
      for (double& v : px) v = u(rng);
      d.add(r, px);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("two-half sampler: equal halves, replacement, determinism") {
  std::mt19937_64 rng(5);
  const Dataset source = tagged_dataset(kMods, 10, "s", rng);
  const Dataset target = tagged_dataset({"real", "print"}, 3, "t", rng);

  TwoHalfSampler eight(source, target, 4, TargetSampling::Uniform, 1);
  const DomainBatch b = eight.next();
  CHECK(b.source_images.dim(0) == 4);
  CHECK(b.target_images.dim(0) == 4);
  CHECK(b.stacked_images().dim(0) == 8);
  CHECK(eight.batches_per_epoch() == 8);

  // Pool of 6 target images, 100 batches of half 4.
  std::map<std::string, int> seen;
  TwoHalfSampler sampler(source, target, 4, TargetSampling::Uniform, 9);
  bool duplicate_in_batch = false;
  for (int i = 0; i < 100; ++i) {
    const DomainBatch d = sampler.next();
    REQUIRE(d.half() == 4);
    REQUIRE(d.target_labels.size() == 4);
    std::set<double> firsts;
    for (std::size_t r = 0; r < 4; ++r) {
      firsts.insert(d.target_images.data()[r * 16]);
    }
    duplicate_in_batch |= firsts.size() < 4;
    for (std::size_t r = 0; r < 4; ++r) ++seen[std::to_string(d.target_images.data()[r * 16])];
  }
  CHECK(seen.size() == 6);
  CHECK(duplicate_in_batch);

  TwoHalfSampler a(source, target, 5, TargetSampling::Uniform, 3), c(source, target, 5, TargetSampling::Uniform, 3);
  TwoHalfSampler none(source, target, 5, TargetSampling::None, 3);
  for (int i = 0; i < 20; ++i) {
    const DomainBatch x = a.next(), y = c.next(), z = none.next();
    CHECK(x.source_images == y.source_images);
    CHECK(x.target_images == y.target_images);
    CHECK(z.source_images == x.source_images);  // target side does not disturb the source stream
    CHECK_FALSE(z.has_target());
  }
}

TEST_CASE("two-half sampler stratifies by modality") {
  std::mt19937_64 rng(6);
  const Dataset source = tagged_dataset(kMods, 7, "s", rng);
  const Dataset target = tagged_dataset(kMods, 1, "t", rng);
  TwoHalfSampler s(source, target, 8, TargetSampling::Stratified, 2);
  std::map<std::string, int> visits;
  for (int i = 0; i < 21; ++i) {
    const DomainBatch b = s.next();
    std::map<std::string, int> src, tgt;
    for (const auto& m : b.source_modalities) ++src[m];
    for (const auto& m : b.target_modalities) ++tgt[m];
    CHECK(src == std::map<std::string, int>{{"print", 3}, {"real", 3}, {"video", 2}});
    CHECK(tgt == src);
    for (std::size_t r = 0; r < b.half(); ++r) ++visits[std::to_string(b.source_images.data()[r * 16])];
  }
  // 21 batches draw each real and print row 9 times: every queue cycled fully.
  CHECK(visits.size() == 21);

  const Dataset partial = tagged_dataset({"real", "print"}, 2, "t", rng);
  CHECK_THROWS_AS(TwoHalfSampler(source, partial, 4, TargetSampling::Stratified, 1), ProtocolError);
  CHECK_THROWS_AS(TwoHalfSampler(source, Dataset(kMods, 4), 4, TargetSampling::Uniform, 1), ProtocolError);
}

TEST_CASE("modality partition covers each half") {
  std::mt19937_64 rng(7);
  const DomainBatch b = make_batch({"real", "video", "print", "real"}, {"print", "real", "video", "video"}, 8, rng);
  const ModalityPartition p = ModalityPartition::of(b, kMods);
  CHECK(p.names == kMods);
  CHECK(p.source[0] == std::vector<std::size_t>{0, 3});
  CHECK(p.target[2] == std::vector<std::size_t>{2, 3});
  for (std::size_t i = 0; i < b.half(); ++i) {
    const bool genuine = std::find(p.source[0].begin(), p.source[0].end(), i) != p.source[0].end();
    CHECK(genuine == (b.source_labels[i] == kGenuineClass));
  }
  const DomainBatch missing = make_batch({"real", "print", "video"}, {"real", "real", "print"}, 8, rng);
  try {
    ModalityPartition::of(missing, kMods);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("video") != std::string::npos);
  }
}

TEST_CASE("joint losses equal independently assembled parts") {
  std::mt19937_64 rng(8);
  const KernelSpec kernel;
  for (int trial = 0; trial < 5; ++trial) {
    const ModelParams params = build_model(small_arch(8), 100 + trial);
    const DomainBatch b = make_batch({"real", "print", "video", "real", "print", "video"},
                                     {"video", "real", "print", "print", "real", "video"}, 8, rng);
    const double lambda = 0.5 + trial;
    {
      Tape tape;
      const LossTerms l = loss_unsupervised(bind(tape, params), b, kernel, lambda);
      const Assembled a = assemble(params, b, nullptr, nullptr, kernel);
      CHECK(std::abs(l.classification.value().item() - a.classification) < 1e-12);
      CHECK(std::abs(l.domain_terms[0].value().item() - a.terms[0]) < 1e-12);
      CHECK(std::abs(l.total.value().item() - (a.classification + lambda * a.terms[0])) < 1e-12);
    }
    {
      const ModalityPartition p = ModalityPartition::of(b, kMods);
      Tape tape;
      const LossTerms l = loss_semisupervised(bind(tape, params), b, p, kernel, lambda);
      const Assembled a = assemble(params, b, &p.source, &p.target, kernel);
      REQUIRE(l.domain_terms.size() == 3);
      CHECK(l.domain_names == kMods);
      double sum = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(l.domain_terms[c].value().item() - a.terms[c]) < 1e-12);
        sum += a.terms[c];
      }
      CHECK(std::abs(l.total.value().item() - (a.classification + lambda * sum)) < 1e-12);
    }
  }
}

TEST_CASE("lambda degeneracy, linearity and identical halves") {
  std::mt19937_64 rng(9);
  const ModelParams params = build_model(small_arch(8), 3);
  const KernelSpec kernel;
  const DomainBatch b = make_batch({"real", "print", "video", "real"}, {"print", "video", "real", "real"}, 8, rng);
  const ModalityPartition p = ModalityPartition::of(b, kMods);

  Tape t0;
  const LossTerms zero = loss_unsupervised(bind(t0, params), b, kernel, 0.0);
  CHECK(zero.total.value().item() == zero.classification.value().item());
  Tape t1;
  const LossTerms zero_semi = loss_semisupervised(bind(t1, params), b, p, kernel, 0.0);
  CHECK(zero_semi.total.value().item() == zero_semi.classification.value().item());

  for (double lambda : {0.25, 0.5, 3.0}) {
    Tape ta, tb;
    const LossTerms one = loss_semisupervised(bind(ta, params), b, p, kernel, lambda);
    const LossTerms two = loss_semisupervised(bind(tb, params), b, p, kernel, 2.0 * lambda);
    const double d1 = one.total.value().item() - one.classification.value().item();
    const double d2 = two.total.value().item() - two.classification.value().item();
    CHECK(d1 > 0.0);
    CHECK(std::abs(d2 - 2.0 * d1) <= 1e-12 * std::abs(d2));
  }

  DomainBatch same = b;
  same.target_images = same.source_images;
  same.target_labels = same.source_labels;
  same.target_modalities = same.source_modalities;
  Tape ts;
  const LossTerms s = loss_unsupervised(bind(ts, params), same, kernel, 0.5);
  CHECK(s.domain_terms[0].value().item() == 0.0);
  CHECK(s.total.value().item() == s.classification.value().item());

  DomainBatch genuine = make_batch({"real", "real", "real"}, {"real", "real", "real"}, 8, rng);
  genuine.target_images = genuine.source_images;
  ModalityPartition only_real;
  only_real.names = {"real"};
  only_real.source = {{0, 1, 2}};
  only_real.target = {{0, 1, 2}};
  Tape tg;
  const LossTerms g = loss_semisupervised(bind(tg, params), genuine, only_real, kernel, 0.5);
  CHECK(g.total.value().item() == g.classification.value().item());

  Tape te;
  CHECK_THROWS_AS(loss_unsupervised(bind(te, params), b, kernel, -1.0), std::invalid_argument);
  ModalityPartition hole = p;
  hole.target[1].clear();
  Tape th;
  CHECK_THROWS_AS(loss_semisupervised(bind(th, params), b, hole, kernel, 0.5), ProtocolError);
}

TEST_CASE("joint losses pass finite-difference checks over all parameters") {
  std::mt19937_64 rng(10);
  const ModelParams params = build_model(small_arch(8), 4);
  const DomainBatch b = make_batch({"real", "print"}, {"print", "real"}, 8, rng);
  const std::vector<std::string> mods{"real", "print"};
  const ModalityPartition p = ModalityPartition::of(b, mods);
  const KernelSpec kernel;
  auto check = [&](bool semi) {
    const ScalarFn f = [&](Tape&, const std::vector<Var>& vars) {
      const BoundModel model{&params, vars};
      return semi ? loss_semisupervised(model, b, p, kernel, 0.5).total
                  : loss_unsupervised(model, b, kernel, 0.5).total;
    };
    return finite_difference_gradcheck(f, params.learnable);
  };
  const GradcheckReport unsup = check(false);
  INFO(unsup.summary());
  CHECK(unsup.passed);
  CHECK(unsup.checked == params.parameter_count());
  const GradcheckReport semi = check(true);
  INFO(semi.summary());
  CHECK(semi.passed);
  CHECK(semi.max_rel_error < 1e-4);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 6;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 7;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.batch_size = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.lambda = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_objective("semisupervised") == Objective::Semisupervised);
  CHECK_THROWS_AS(parse_objective("dann"), std::invalid_argument);
}

TEST_CASE("stdcnn separates a linearly separable toy set") {
  Dataset toy({"real", "print"}, 8);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  for (int i = 0; i < 24; ++i) {
    SampleRecord r;
    r.path = "x";
    r.subject = "s" + std::to_string(i % 4);
    r.video = "v" + std::to_string(i);
    r.modality = i % 2 ? "print" : "real";
    r.label = i % 2 ? Label::Fake : Label::Genuine;
    std::vector<double> px(64);
    for (double& v : px) v = u(rng) + (i % 2 ? 0.6 : 0.0);
    toy.add(r, px);
  }
  TrainConfig c;
  c.objective = Objective::StdCnn;
  c.architecture = small_arch(8);
  c.batch_size = 8;
  c.epochs = 50;
  const TrainResult r = train(toy, Dataset(), c);
  CHECK(frame_accuracy(r.params, toy) == 1.0);
  CHECK(r.epoch_loss.size() == 50);
  CHECK(r.steps == 50 * 6);
}

TEST_CASE("training is deterministic and lambda = 0 matches stdcnn bit for bit") {
  const SyntheticData d = generate_synthetic(small_spec());
  const Dataset source = d.source.filter([](const SampleRecord& r) { return r.split == Split::Train; });
  const Dataset target = restrict_to_subjects(d.target, {"tgt-s001"});
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 12;
  c.objective = Objective::Semisupervised;
  const TrainResult a = train(source, target, c);
  const TrainResult b = train(source, target, c);
  CHECK(a.params == b.params);
  CHECK(a.epoch_loss == b.epoch_loss);

  c.objective = Objective::StdCnn;
  const TrainResult std_run = train(source, target, c);
  CHECK_FALSE(std_run.params == a.params);
  for (Objective o : {Objective::Unsupervised, Objective::Semisupervised}) {
    c.objective = o;
    c.lambda = 0.0;
    const TrainResult z = train(source, target, c);
    CHECK(z.params == std_run.params);
    CHECK(z.epoch_loss == std_run.epoch_loss);
  }
}

TEST_CASE("training log and checkpoint hooks") {
  const SyntheticData d = generate_synthetic(small_spec());
  const Dataset source = d.source.filter([](const SampleRecord& r) { return r.split == Split::Train; });
  const Dataset target = restrict_to_subjects(d.target, {"tgt-s002"});
  TrainConfig c;
  c.epochs = 2;
  std::ostringstream log;
  TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint = std::filesystem::temp_directory_path() / "dtn-hook.ckpt";
  const TrainResult r = train(source, target, c, hooks);
  std::istringstream in(log.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch\tbatch\tl_c\tmmd_real\tmmd_print\tmmd_video\ttotal");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), '\t') == 6);
  }
  CHECK(rows == r.steps);
  CHECK(load_checkpoint(hooks.checkpoint) == r.params);
  std::filesystem::remove(hooks.checkpoint);

  c.objective = Objective::Unsupervised;
  c.epochs = 1;
  std::ostringstream unsup_log;
  hooks.log = &unsup_log;
  hooks.checkpoint.clear();
  train(source, target, c, hooks);
  CHECK(unsup_log.str().starts_with("epoch\tbatch\tl_c\tmmd_domain\ttotal\n"));
}

TEST_CASE("training loss decreases on the benchmark for every seed") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SyntheticData d = generate_synthetic(small_spec(seed));
    const Dataset source = d.source.filter([](const SampleRecord& r) { return r.split == Split::Train; });
    const Dataset pool = restrict_to_subjects(d.target, select_subjects(
        d.target.filter([](const SampleRecord& r) { return r.split == Split::Train; }), 1, seed));
    TrainConfig c;
    c.seed = seed;
    c.epochs = 6;
    const TrainResult r = train(source, pool, c);
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
  }
}
