#include "dtn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dtn {

ArchitectureConfig ArchitectureConfig::desk() {
  ArchitectureConfig c;
  c.input_side = 16;
  c.input_channels = 1;
  c.stages = {ConvStage{8, 3, 1, 1, true, 2, 2}, ConvStage{16, 3, 1, 1, true, 2, 2}};
  c.hidden = {32};
  c.classes = 2;
  return c;
}

ArchitectureConfig ArchitectureConfig::alexnet_shape() {
  ArchitectureConfig c;
  c.input_side = 224;
  c.input_channels = 3;
  c.stages = {
      ConvStage{96, 11, 4, 2, true, 3, 2},   // 55 -> 27
      ConvStage{256, 5, 1, 2, true, 3, 2},   // 27 -> 13
      ConvStage{384, 3, 1, 1, true, 3, 2},   // 13 -> 6
      ConvStage{384, 3, 1, 1, true, 2, 1},   // 6 -> 5
      ConvStage{256, 3, 1, 1, true, 3, 2},   // 5 -> 2
  };
  c.hidden = {4096, 4096};
  c.classes = 2;
  return c;
}

std::vector<std::size_t> ArchitectureConfig::stage_sides() const {
  std::vector<std::size_t> sides;
  std::size_t side = input_side;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const ConvStage& s = stages[i];
    try {
      side = ops::conv_output_side(side, s.kernel, s.stride, s.padding);
      side = ops::conv_output_side(side, s.pool_window, s.pool_stride, 0);
    } catch (const ShapeError& e) {
      throw std::invalid_argument("stage " + std::to_string(i) + ": " + e.what());
    }
    sides.push_back(side);
  }
  return sides;
}

void ArchitectureConfig::validate() const {
  if (input_side == 0 || input_channels == 0) throw std::invalid_argument("input must be non-empty");
  if (stages.empty()) throw std::invalid_argument("at least one conv+pool stage is required");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].out_channels == 0) {
      throw std::invalid_argument("stage " + std::to_string(i) + ": zero output channels");
    }
  }
  (void)stage_sides();
  for (std::size_t w : hidden) {
    if (w == 0) throw std::invalid_argument("dense layer of width 0");
  }
  if (classes < 2) throw std::invalid_argument("need at least two classes");
}

std::size_t ArchitectureConfig::feature_width() const {
  const std::size_t side = stage_sides().back();
  return stages.back().out_channels * side * side;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : learnable) n += t.size();
  return n;
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return learnable[i];
  }
  throw std::out_of_range("no parameter named " + name);
}

namespace {

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace

ModelParams build_model(const ArchitectureConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(seed);
  auto add = [&p](std::string name, Tensor t) {
    p.names.push_back(std::move(name));
    p.learnable.push_back(std::move(t));
  };
  std::size_t channels = config.input_channels;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const ConvStage& s = config.stages[i];
    const std::string prefix = "stage" + std::to_string(i);
    const double fan_in = static_cast<double>(channels * s.kernel * s.kernel);
    add(prefix + ".conv.weight",
        uniform({s.out_channels, channels, s.kernel, s.kernel}, std::sqrt(6.0 / fan_in), rng));
    if (s.batchnorm) {
      add(prefix + ".bn.gamma", Tensor({s.out_channels}, 1.0));
      add(prefix + ".bn.beta", Tensor({s.out_channels}, 0.0));
      p.running.push_back({Tensor({s.out_channels}, 0.0), Tensor({s.out_channels}, 1.0)});
    } else {
      add(prefix + ".conv.bias", Tensor({s.out_channels}, 0.0));
      p.running.push_back({Tensor({1}, 0.0), Tensor({1}, 1.0)});
    }
    channels = s.out_channels;
  }
  std::size_t width = config.feature_width();
  std::vector<std::size_t> outs = config.hidden;
  outs.push_back(config.classes);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::string prefix = "dense" + std::to_string(i);
    add(prefix + ".weight", uniform({width, outs[i]}, std::sqrt(6.0 / static_cast<double>(width)), rng));
    add(prefix + ".bias", Tensor({outs[i]}, 0.0));
    width = outs[i];
  }
  return p;
}

BoundModel bind(Tape& tape, const ModelParams& params) {
  BoundModel b{&params, {}};
  b.vars.reserve(params.learnable.size());
  for (const Tensor& t : params.learnable) b.vars.push_back(tape.variable(t));
  return b;
}

Var forward_features(const BoundModel& model, Var batch, ops::Mode mode,
                     std::vector<ops::BatchNormStats>* running_update,
                     std::vector<Var>* stage_outputs) {
  const ModelParams& p = *model.params;
  const ArchitectureConfig& cfg = p.config;
  const Shape expect{batch.shape().empty() ? 0 : batch.shape()[0], cfg.input_channels,
                     cfg.input_side, cfg.input_side};
  if (batch.shape() != expect) {
    throw ShapeError("model expects input " + shape_string(expect) + ", got " +
                     shape_string(batch.shape()));
  }
  if (running_update) *running_update = p.running;
  std::size_t slot = 0;
  Var h = batch;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const ConvStage& s = cfg.stages[i];
    if (s.batchnorm) {
      h = ops::conv2d(h, model.vars[slot], std::nullopt, {s.stride, s.padding});
      h = ops::batchnorm2d(h, model.vars[slot + 1], model.vars[slot + 2], mode, p.running[i],
                           running_update ? &(*running_update)[i] : nullptr);
      slot += 3;
    } else {
      h = ops::conv2d(h, model.vars[slot], model.vars[slot + 1], {s.stride, s.padding});
      slot += 2;
    }
    h = ops::maxpool2d(ops::relu(h), s.pool_window, s.pool_stride);
    if (stage_outputs) stage_outputs->push_back(h);
  }
  return ops::flatten(h);
}

Var forward_head(const BoundModel& model, Var features) {
  const ModelParams& p = *model.params;
  const std::size_t layers = p.config.dense_layers();
  std::size_t slot = model.vars.size() - 2 * layers;
  Var h = features;
  for (std::size_t i = 0; i < layers; ++i, slot += 2) {
    h = ops::dense(h, model.vars[slot], model.vars[slot + 1]);
    if (i + 1 < layers) h = ops::relu(h);
  }
  return h;
}

Var forward_logits(const BoundModel& model, Var batch, ops::Mode mode,
                   std::vector<ops::BatchNormStats>* running_update) {
  return forward_head(model, forward_features(model, batch, mode, running_update));
}

namespace {

constexpr std::size_t kInferenceChunk = 64;

template <typename Fn>
void for_each_chunk(const Tensor& images, Fn fn) {
  if (images.rank() != 4) throw ShapeError("images must be NCHW, got " + shape_string(images.shape()));
  const std::size_t n = images.dim(0);
  const std::size_t stride = images.size() / n;
  for (std::size_t start = 0; start < n; start += kInferenceChunk) {
    const std::size_t count = std::min(kInferenceChunk, n - start);
    Shape shape = images.shape();
    shape[0] = count;
    std::vector<double> data(images.data().begin() + static_cast<std::ptrdiff_t>(start * stride),
                             images.data().begin() + static_cast<std::ptrdiff_t>((start + count) * stride));
    fn(start, Tensor(std::move(shape), std::move(data)));
  }
}

}  // namespace

Tensor extract_features(const ModelParams& params, const Tensor& images) {
  const std::size_t width = params.config.feature_width();
  Tensor out({images.dim(0), width});
  for_each_chunk(images, [&](std::size_t start, Tensor chunk) {
    Tape tape;
    BoundModel m = bind(tape, params);
    const Tensor& f = forward_features(m, tape.constant(std::move(chunk)), ops::Mode::Eval).value();
    std::copy(f.data().begin(), f.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(start * width));
  });
  return out;
}

std::vector<double> genuine_probability(const ModelParams& params, const Tensor& images) {
  std::vector<double> out(images.dim(0));
  for_each_chunk(images, [&](std::size_t start, Tensor chunk) {
    Tape tape;
    BoundModel m = bind(tape, params);
    const Tensor probs =
        ops::softmax_rows(forward_logits(m, tape.constant(std::move(chunk)), ops::Mode::Eval).value());
    const std::size_t c = probs.dim(1);
    for (std::size_t r = 0; r < probs.dim(0); ++r) out[start + r] = probs[r * c + kGenuineClass];
  });
  return out;
}

// ---------------------------------------------------------------------------
// checkpoint

namespace {

constexpr const char* kMagic = "dtn-checkpoint";
constexpr int kVersion = 1;

void write_le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct NamedRef {
  std::string name;
  const Tensor* tensor;
};

std::vector<NamedRef> all_tensors(const ModelParams& p) {
  std::vector<NamedRef> refs;
  for (std::size_t i = 0; i < p.names.size(); ++i) refs.push_back({p.names[i], &p.learnable[i]});
  for (std::size_t i = 0; i < p.running.size(); ++i) {
    if (!p.config.stages[i].batchnorm) continue;
    const std::string prefix = "stage" + std::to_string(i) + ".bn.";
    refs.push_back({prefix + "running_mean", &p.running[i].mean});
    refs.push_back({prefix + "running_var", &p.running[i].var});
  }
  return refs;
}

}  // namespace

void save_checkpoint(const ModelParams& params, std::ostream& out) {
  const ArchitectureConfig& c = params.config;
  out << kMagic << ' ' << kVersion << '\n';
  out << "input " << c.input_side << ' ' << c.input_channels << '\n';
  for (const ConvStage& s : c.stages) {
    out << "stage " << s.out_channels << ' ' << s.kernel << ' ' << s.stride << ' ' << s.padding
        << ' ' << (s.batchnorm ? 1 : 0) << ' ' << s.pool_window << ' ' << s.pool_stride << '\n';
  }
  out << "hidden";
  for (std::size_t w : c.hidden) out << ' ' << w;
  out << '\n' << "classes " << c.classes << '\n';
  const auto refs = all_tensors(params);
  for (const NamedRef& r : refs) {
    out << "tensor " << r.name << ' ' << r.tensor->rank();
    for (std::size_t d : r.tensor->shape()) out << ' ' << d;
    out << '\n';
  }
  out << "end\n";
  for (const NamedRef& r : refs) {
    for (double v : r.tensor->data()) write_le(out, v);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(params, out);
}

ModelParams load_checkpoint(std::istream& in) {
  std::string line;
  auto fail = [](const std::string& why) { return std::runtime_error("bad checkpoint: " + why); };
  if (!std::getline(in, line)) throw fail("empty stream");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) throw fail("missing magic");
    if (version != kVersion) throw fail("unsupported version " + std::to_string(version));
  }
  ArchitectureConfig cfg;
  std::vector<std::pair<std::string, Shape>> entries;
  bool ended = false;
  while (!ended && std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "input") {
      fields >> cfg.input_side >> cfg.input_channels;
    } else if (key == "stage") {
      ConvStage s;
      int bn = 0;
      fields >> s.out_channels >> s.kernel >> s.stride >> s.padding >> bn >> s.pool_window >>
          s.pool_stride;
      s.batchnorm = bn != 0;
      cfg.stages.push_back(s);
    } else if (key == "hidden") {
      std::size_t w;
      while (fields >> w) cfg.hidden.push_back(w);
      fields.clear();
    } else if (key == "classes") {
      fields >> cfg.classes;
    } else if (key == "tensor") {
      std::string name;
      std::size_t rank = 0;
      fields >> name >> rank;
      Shape shape(rank);
      for (std::size_t& d : shape) fields >> d;
      entries.emplace_back(name, shape);
    } else if (key == "end") {
      ended = true;
      continue;
    } else {
      throw fail("unknown header line '" + line + "'");
    }
    if (fields.fail()) throw fail("malformed line '" + line + "'");
  }
  if (!ended) throw fail("header not terminated");

  // Rebuild the layout, then overwrite every tensor from the payload.
  ModelParams p = build_model(cfg, 0);
  std::vector<Tensor*> slots;
  std::vector<std::string> slot_names;
  for (std::size_t i = 0; i < p.names.size(); ++i) {
    slots.push_back(&p.learnable[i]);
    slot_names.push_back(p.names[i]);
  }
  for (std::size_t i = 0; i < p.running.size(); ++i) {
    if (!cfg.stages[i].batchnorm) continue;
    const std::string prefix = "stage" + std::to_string(i) + ".bn.";
    slots.push_back(&p.running[i].mean);
    slot_names.push_back(prefix + "running_mean");
    slots.push_back(&p.running[i].var);
    slot_names.push_back(prefix + "running_var");
  }
  if (entries.size() != slots.size()) throw fail("tensor count does not match architecture");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (entries[i].first != slot_names[i] || entries[i].second != slots[i]->shape()) {
      throw fail("tensor " + entries[i].first + " does not match architecture slot " + slot_names[i]);
    }
  }
  for (Tensor* t : slots) {
    for (double& v : t->data()) v = read_le(in);
  }
  return p;
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace dtn
