#include "dtn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace dtn::ops {

namespace {

Tape& tape_of(Var v) {
  if (!v.tape) throw std::invalid_argument("variable is not attached to a tape");
  return *v.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

}  // namespace

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape("add", x, y);
  Tensor out = x;
  out.accumulate(y);
  return tape_of(a).record("add", std::move(out), {a, b}, [](const BackwardArgs& args) {
    for (Tensor* g : args.input_grads) {
      if (g) g->accumulate(args.output_grad);
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape("mul", x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return tape_of(a).record("mul", std::move(out), {a, b}, [](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& y = *args.inputs[1];
    const Tensor& g = args.output_grad;
    if (Tensor* gx = args.input_grads[0]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * y[i];
    }
    if (Tensor* gy = args.input_grads[1]) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gy)[i] += g[i] * x[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return tape_of(a).record("scale", std::move(out), {a}, [factor](const BackwardArgs& args) {
    if (Tensor* g = args.input_grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += factor * args.output_grad[i];
    }
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return tape_of(a).record("sum", Tensor::scalar(total), {a}, [](const BackwardArgs& args) {
    if (Tensor* g = args.input_grads[0]) {
      const double up = args.output_grad[0];
      for (double& v : g->data()) v += up;
    }
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return tape_of(a).record("relu", std::move(out), {a}, [](const BackwardArgs& args) {
    if (Tensor* g = args.input_grads[0]) {
      const Tensor& x = *args.inputs[0];
      for (std::size_t i = 0; i < g->size(); ++i) {
        if (x[i] > 0.0) (*g)[i] += args.output_grad[i];
      }
    }
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return tape_of(a).record("tanh", std::move(out), {a}, [](const BackwardArgs& args) {
    if (Tensor* g = args.input_grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double y = args.output[i];
        (*g)[i] += args.output_grad[i] * (1.0 - y * y);
      }
    }
  });
}

Var flatten(Var a) {
  const Tensor& x = a.value();
  if (x.rank() < 1) throw ShapeError("flatten: rank-0 input");
  const std::size_t n = x.dim(0);
  Tensor out = x.reshaped({n, x.size() / n});
  return tape_of(a).record("flatten", std::move(out), {a}, [](const BackwardArgs& args) {
    if (Tensor* g = args.input_grads[0]) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += args.output_grad[i];
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& x = a.value();
  if (x.rank() < 1) throw ShapeError("gather_rows: rank-0 input");
  if (rows.empty()) throw ShapeError("gather_rows: empty row selection");
  const std::size_t n = x.dim(0);
  const std::size_t stride = x.size() / n;
  Shape shape = x.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " out of range " +
                       std::to_string(n));
    }
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(rows[r] * stride), stride,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * stride));
  }
  std::vector<std::size_t> picked(rows.begin(), rows.end());
  return tape_of(a).record(
      "gather_rows", std::move(out), {a}, [picked = std::move(picked), stride](const BackwardArgs& args) {
        if (Tensor* g = args.input_grads[0]) {
          for (std::size_t r = 0; r < picked.size(); ++r) {
            for (std::size_t k = 0; k < stride; ++k) {
              (*g)[picked[r] * stride + k] += args.output_grad[r * stride + k];
            }
          }
        }
      });
}

std::size_t conv_output_side(std::size_t input, std::size_t kernel, std::size_t stride,
                             std::size_t padding) {
  if (kernel == 0 || stride == 0) throw ShapeError("window and stride must be positive");
  if (input + 2 * padding < kernel) {
    throw ShapeError("window " + std::to_string(kernel) + " larger than padded input " +
                     std::to_string(input + 2 * padding));
  }
  return (input + 2 * padding - kernel) / stride + 1;
}

Var conv2d(Var input, Var weights, std::optional<Var> bias, ConvGeometry geometry) {
  const Tensor& x = input.value();
  const Tensor& w = weights.value();
  require_rank("conv2d input", x, 4);
  require_rank("conv2d weights", w, 4);
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t o = w.dim(0), k = w.dim(2);
  if (w.dim(1) != c || w.dim(3) != k) {
    throw ShapeError("conv2d: weights " + shape_string(w.shape()) + " incompatible with input " +
                     shape_string(x.shape()));
  }
  if (bias && (bias->value().rank() != 1 || bias->value().dim(0) != o)) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(o) + "]");
  }
  const std::size_t s = geometry.stride, p = geometry.padding;
  const std::size_t ho = conv_output_side(h, k, s, p);
  const std::size_t wo = conv_output_side(wd, k, s, p);

  // Valid output range along one axis for a kernel tap.
  auto range = [p, s](std::size_t tap, std::size_t in_side, std::size_t out_side) {
    std::size_t lo = 0;
    while (lo < out_side && lo * s + tap < p) ++lo;
    std::size_t hi = lo;
    while (hi < out_side && hi * s + tap - p < in_side) ++hi;
    return std::pair{lo, hi};
  };

  Tensor out({n, o, ho, wo});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < o; ++oc) {
      double* plane = out.data().data() + ((b * o + oc) * ho * wo);
      if (bias) std::fill(plane, plane + ho * wo, bias->value()[oc]);
      for (std::size_t ic = 0; ic < c; ++ic) {
        const double* src = x.data().data() + ((b * c + ic) * h * wd);
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto [y0, y1] = range(ky, h, ho);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto [x0, x1] = range(kx, wd, wo);
            const double wv = w[((oc * c + ic) * k + ky) * k + kx];
            for (std::size_t oy = y0; oy < y1; ++oy) {
              const double* row = src + (oy * s + ky - p) * wd;
              double* dst = plane + oy * wo;
              for (std::size_t ox = x0; ox < x1; ++ox) dst[ox] += wv * row[ox * s + kx - p];
            }
          }
        }
      }
    }
  }

  std::vector<Var> inputs{input, weights};
  if (bias) inputs.push_back(*bias);
  return tape_of(input).record(
      "conv2d", std::move(out), std::move(inputs),
      [=](const BackwardArgs& args) {
        const Tensor& x = *args.inputs[0];
        const Tensor& w = *args.inputs[1];
        const Tensor& g = args.output_grad;
        Tensor* gx = args.input_grads[0];
        Tensor* gw = args.input_grads[1];
        Tensor* gb = args.input_grads.size() > 2 ? args.input_grads[2] : nullptr;
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t oc = 0; oc < o; ++oc) {
            const double* gplane = g.data().data() + ((b * o + oc) * ho * wo);
            if (gb) {
              double acc = 0.0;
              for (std::size_t i = 0; i < ho * wo; ++i) acc += gplane[i];
              (*gb)[oc] += acc;
            }
            for (std::size_t ic = 0; ic < c; ++ic) {
              const std::size_t in_off = (b * c + ic) * h * wd;
              for (std::size_t ky = 0; ky < k; ++ky) {
                const auto [y0, y1] = range(ky, h, ho);
                for (std::size_t kx = 0; kx < k; ++kx) {
                  const auto [x0, x1] = range(kx, wd, wo);
                  const std::size_t widx = ((oc * c + ic) * k + ky) * k + kx;
                  const double wv = w[widx];
                  double wacc = 0.0;
                  for (std::size_t oy = y0; oy < y1; ++oy) {
                    const std::size_t row = in_off + (oy * s + ky - p) * wd;
                    const double* grow = gplane + oy * wo;
                    for (std::size_t ox = x0; ox < x1; ++ox) {
                      const std::size_t xi = row + ox * s + kx - p;
                      wacc += grow[ox] * x[xi];
                      if (gx) (*gx)[xi] += grow[ox] * wv;
                    }
                  }
                  if (gw) (*gw)[widx] += wacc;
                }
              }
            }
          }
        }
      });
}

Var maxpool2d(Var input, std::size_t window, std::size_t stride) {
  const Tensor& x = input.value();
  require_rank("maxpool2d", x, 4);
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (window > h || window > w) {
    throw ShapeError("maxpool2d: window " + std::to_string(window) + " larger than input " +
                     shape_string(x.shape()));
  }
  const std::size_t ho = conv_output_side(h, window, stride, 0);
  const std::size_t wo = conv_output_side(w, window, stride, 0);
  Tensor out({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = base + oy * stride * w + ox * stride;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = base + (oy * stride + dy) * w + ox * stride + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (plane * ho + oy) * wo + ox;
        out[o] = x[best];
        (*argmax)[o] = best;
      }
    }
  }
  return tape_of(input).record("maxpool2d", std::move(out), {input},
                               [argmax](const BackwardArgs& args) {
                                 if (Tensor* g = args.input_grads[0]) {
                                   for (std::size_t o = 0; o < argmax->size(); ++o) {
                                     (*g)[(*argmax)[o]] += args.output_grad[o];
                                   }
                                 }
                               });
}

Var batchnorm2d(Var input, Var gamma, Var beta, Mode mode, const BatchNormStats& stats,
                BatchNormStats* running, BatchNormOptions options) {
  const Tensor& x = input.value();
  require_rank("batchnorm2d", x, 4);
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const Shape channel_shape{c};
  if (gamma.value().shape() != channel_shape || beta.value().shape() != channel_shape) {
    throw ShapeError("batchnorm2d: gamma/beta must be [" + std::to_string(c) + "]");
  }
  if (stats.mean.shape() != channel_shape || stats.var.shape() != channel_shape) {
    throw ShapeError("batchnorm2d: running statistics must be [" + std::to_string(c) + "]");
  }
  if (mode == Mode::Train && n < 2) {
    throw ShapeError("batchnorm2d: train mode needs a batch of at least 2, got 1");
  }
  const double count = static_cast<double>(n * hw);
  const double eps = options.eps;

  Tensor mean(channel_shape), inv_std(channel_shape);
  if (mode == Mode::Train) {
    Tensor var(channel_shape);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* src = x.data().data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) acc += src[i];
      }
      const double mu = acc / count;
      double sq = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* src = x.data().data() + (b * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) sq += (src[i] - mu) * (src[i] - mu);
      }
      mean[ch] = mu;
      var[ch] = sq / count;
      inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);
    }
    if (running) {
      const double m = options.momentum;
      const double unbias = count / (count - 1.0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        running->mean[ch] = m * stats.mean[ch] + (1.0 - m) * mean[ch];
        running->var[ch] = m * stats.var[ch] + (1.0 - m) * var[ch] * unbias;
      }
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = stats.mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(stats.var[ch] + eps);
    }
  }

  // xhat is kept for the backward pass.
  auto xhat = std::make_shared<Tensor>(x.shape());
  Tensor out(x.shape());
  const Tensor& gm = gamma.value();
  const Tensor& bt = beta.value();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (b * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double v = (x[off + i] - mean[ch]) * inv_std[ch];
        (*xhat)[off + i] = v;
        out[off + i] = gm[ch] * v + bt[ch];
      }
    }
  }

  const bool train = mode == Mode::Train;
  return tape_of(input).record(
      "batchnorm2d", std::move(out), {input, gamma, beta},
      [=](const BackwardArgs& args) {
        const Tensor& g = args.output_grad;
        const Tensor& gm = *args.inputs[1];
        Tensor* gx = args.input_grads[0];
        Tensor* ggamma = args.input_grads[1];
        Tensor* gbeta = args.input_grads[2];
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_g += g[off + i];
              sum_gx += g[off + i] * (*xhat)[off + i];
            }
          }
          if (ggamma) (*ggamma)[ch] += sum_gx;
          if (gbeta) (*gbeta)[ch] += sum_g;
          if (!gx) continue;
          const double scale = gm[ch] * inv_std[ch];
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              if (train) {
                (*gx)[off + i] +=
                    scale * (g[off + i] - sum_g / count - (*xhat)[off + i] * sum_gx / count);
              } else {
                (*gx)[off + i] += scale * g[off + i];
              }
            }
          }
        }
      });
}

Var dense(Var input, Var weights, Var bias) {
  const Tensor& x = input.value();
  const Tensor& w = weights.value();
  require_rank("dense input", x, 2);
  require_rank("dense weights", w, 2);
  const std::size_t n = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
  if (w.dim(0) != in) {
    throw ShapeError("dense: input " + shape_string(x.shape()) + " incompatible with weights " +
                     shape_string(w.shape()));
  }
  if (bias.value().shape() != Shape{out_dim}) {
    throw ShapeError("dense: bias must be [" + std::to_string(out_dim) + "]");
  }
  Tensor out({n, out_dim});
  for (std::size_t r = 0; r < n; ++r) {
    double* dst = out.data().data() + r * out_dim;
    for (std::size_t j = 0; j < out_dim; ++j) dst[j] = bias.value()[j];
    for (std::size_t i = 0; i < in; ++i) {
      const double xv = x[r * in + i];
      const double* wrow = w.data().data() + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) dst[j] += xv * wrow[j];
    }
  }
  return tape_of(input).record(
      "dense", std::move(out), {input, weights, bias}, [n, in, out_dim](const BackwardArgs& args) {
        const Tensor& x = *args.inputs[0];
        const Tensor& w = *args.inputs[1];
        const Tensor& g = args.output_grad;
        Tensor* gx = args.input_grads[0];
        Tensor* gw = args.input_grads[1];
        Tensor* gb = args.input_grads[2];
        for (std::size_t r = 0; r < n; ++r) {
          const double* grow = g.data().data() + r * out_dim;
          if (gb) {
            for (std::size_t j = 0; j < out_dim; ++j) (*gb)[j] += grow[j];
          }
          for (std::size_t i = 0; i < in; ++i) {
            const double* wrow = w.data().data() + i * out_dim;
            const double xv = x[r * in + i];
            double acc = 0.0;
            for (std::size_t j = 0; j < out_dim; ++j) {
              acc += grow[j] * wrow[j];
              if (gw) (*gw)[i * out_dim + j] += xv * grow[j];
            }
            if (gx) (*gx)[r * in + i] += acc;
          }
        }
      });
}

Tensor softmax_rows(const Tensor& logits) {
  require_rank("softmax_rows", logits, 2);
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    double mx = logits[r * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits[r * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[r * c + j] = std::exp(logits[r * c + j] - mx);
      z += out[r * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] /= z;
  }
  return out;
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  require_rank("softmax_cross_entropy", z, 2);
  const std::size_t n = z.dim(0), c = z.dim(1);
  if (labels.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(c) + ")");
    }
  }
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double mx = z[r * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, z[r * c + j]);
    double lse = 0.0;
    for (std::size_t j = 0; j < c; ++j) lse += std::exp(z[r * c + j] - mx);
    loss += std::log(lse) + mx - z[r * c + static_cast<std::size_t>(labels[r])];
  }
  loss /= static_cast<double>(n);
  std::vector<int> ys(labels.begin(), labels.end());
  return tape_of(logits).record(
      "softmax_cross_entropy", Tensor::scalar(loss), {logits},
      [ys = std::move(ys), n, c](const BackwardArgs& args) {
        Tensor* g = args.input_grads[0];
        if (!g) return;
        const Tensor p = softmax_rows(*args.inputs[0]);
        const double up = args.output_grad[0] / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target = static_cast<std::size_t>(ys[r]) == j ? 1.0 : 0.0;
            (*g)[r * c + j] += up * (p[r * c + j] - target);
          }
        }
      });
}

}  // namespace dtn::ops
