#include "dtn/kernel_mmd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dtn {

void KernelSpec::validate() const {
  if (bandwidths.empty()) throw std::invalid_argument("kernel spec has no bandwidths");
  for (double s : bandwidths) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("kernel bandwidth must be positive, got " + std::to_string(s));
    }
  }
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("kernel arguments differ in dimension: " + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()));
  }
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    d2 += diff * diff;
  }
  return d2;
}

double rbf_eval(std::span<const double> x, std::span<const double> y, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("rbf bandwidth must be positive");
  return std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
}

namespace {

double mixture_of_d2(double d2, const KernelSpec& spec) {
  double k = 0.0;
  for (double s : spec.bandwidths) k += std::exp(-d2 / (2.0 * s * s));
  return k;
}

// Kernel value and its derivative weight sum_i k_i / s_i^2, so that
// dk(u, v)/du = weight * (v - u).
struct KernelTerms {
  double value;
  double weight;
};

KernelTerms mixture_terms(double d2, const KernelSpec& spec) {
  KernelTerms t{0.0, 0.0};
  for (double s : spec.bandwidths) {
    const double k = std::exp(-d2 / (2.0 * s * s));
    t.value += k;
    t.weight += k / (s * s);
  }
  return t;
}

std::span<const double> row(const Tensor& t, std::size_t i) {
  const std::size_t d = t.dim(1);
  return t.data().subspan(i * d, d);
}

void check_sets(const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || y.rank() != 2) {
    throw ShapeError("sample sets must be [m,d], got " + shape_string(x.shape()) + " and " +
                     shape_string(y.shape()));
  }
  if (x.dim(1) != y.dim(1)) {
    throw ShapeError("sample sets differ in dimension: " + shape_string(x.shape()) + " vs " +
                     shape_string(y.shape()));
  }
}

// Sum in ascending order so that the result does not depend on how the
// entries were enumerated. This makes every estimator exactly symmetric in
// its arguments and exactly invariant to row permutations.
double ordered_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

double block_sum(const Tensor& a, const Tensor& b, const KernelSpec& spec, bool skip_diagonal) {
  std::vector<double> entries;
  entries.reserve(a.dim(0) * b.dim(0));
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    for (std::size_t j = 0; j < b.dim(0); ++j) {
      if (skip_diagonal && i == j) continue;
      entries.push_back(mixture_of_d2(squared_distance(row(a, i), row(b, j)), spec));
    }
  }
  return ordered_sum(entries);
}

}  // namespace

double mixture_eval(std::span<const double> x, std::span<const double> y, const KernelSpec& spec) {
  spec.validate();
  return mixture_of_d2(squared_distance(x, y), spec);
}

Tensor gram(const Tensor& x, const Tensor& y, const KernelSpec& spec) {
  spec.validate();
  check_sets(x, y);
  const std::size_t m = x.dim(0), n = y.dim(0);
  Tensor g({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      g[i * n + j] = mixture_of_d2(squared_distance(row(x, i), row(y, j)), spec);
    }
  }
  return g;
}

double mmd2_biased(const Tensor& x, const Tensor& y, const KernelSpec& spec) {
  spec.validate();
  check_sets(x, y);
  const double m = static_cast<double>(x.dim(0));
  const double n = static_cast<double>(y.dim(0));
  const double xx = block_sum(x, x, spec, false) / (m * m);
  const double yy = block_sum(y, y, spec, false) / (n * n);
  const double xy = block_sum(x, y, spec, false) / (m * n);
  return (xx + yy) - 2.0 * xy;
}

double mmd2_unbiased(const Tensor& x, const Tensor& y, const KernelSpec& spec) {
  spec.validate();
  check_sets(x, y);
  if (x.dim(0) < 2 || y.dim(0) < 2) {
    throw std::invalid_argument("unbiased MMD needs at least 2 samples per set, got " +
                                std::to_string(x.dim(0)) + " and " + std::to_string(y.dim(0)));
  }
  const double m = static_cast<double>(x.dim(0));
  const double n = static_cast<double>(y.dim(0));
  const double xx = block_sum(x, x, spec, true) / (m * (m - 1.0));
  const double yy = block_sum(y, y, spec, true) / (n * (n - 1.0));
  const double xy = block_sum(x, y, spec, false) / (m * n);
  return (xx + yy) - 2.0 * xy;
}

double mmd2_half_normalized(const Tensor& x, const Tensor& y, const KernelSpec& spec) {
  spec.validate();
  check_sets(x, y);
  if (x.dim(0) != y.dim(0) || x.dim(0) < 2) {
    throw std::invalid_argument("half-normalized MMD needs equal set sizes of at least 2");
  }
  const double half = static_cast<double>(x.dim(0)) / 2.0;
  return (block_sum(x, x, spec, true) + block_sum(y, y, spec, true)) / half -
         block_sum(x, y, spec, true) / half;
}

double mmd2(const Tensor& x, const Tensor& y, const KernelSpec& spec, Estimator estimator) {
  return estimator == Estimator::Biased ? mmd2_biased(x, y, spec) : mmd2_unbiased(x, y, spec);
}

namespace {

// Adds coeff * sum_j dk(a_i, b_j)/da_i into grad rows of `a`.
void accumulate_block_grad(const Tensor& a, const Tensor& b, const KernelSpec& spec, double coeff,
                           bool skip_diagonal, Tensor& grad) {
  const std::size_t d = a.dim(1);
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    auto ai = row(a, i);
    for (std::size_t j = 0; j < b.dim(0); ++j) {
      if (skip_diagonal && i == j) continue;
      auto bj = row(b, j);
      const KernelTerms t = mixture_terms(squared_distance(ai, bj), spec);
      const double w = coeff * t.weight;
      for (std::size_t k = 0; k < d; ++k) grad[i * d + k] += w * (bj[k] - ai[k]);
    }
  }
}

struct Coefficients {
  double xx, yy, xy;
  bool skip_diagonal;
};

Coefficients coefficients(std::size_t m_count, std::size_t n_count, Estimator estimator) {
  const double m = static_cast<double>(m_count);
  const double n = static_cast<double>(n_count);
  if (estimator == Estimator::Biased) return {1.0 / (m * m), 1.0 / (n * n), -2.0 / (m * n), false};
  return {1.0 / (m * (m - 1.0)), 1.0 / (n * (n - 1.0)), -2.0 / (m * n), true};
}

}  // namespace

Tensor mmd2_grad(const Tensor& x, const Tensor& y, const KernelSpec& spec, Estimator estimator) {
  // Validates preconditions the same way the estimator does.
  (void)mmd2(x, y, spec, estimator);
  const Coefficients c = coefficients(x.dim(0), y.dim(0), estimator);
  Tensor grad(x.shape());
  accumulate_block_grad(x, x, spec, 2.0 * c.xx, c.skip_diagonal, grad);
  accumulate_block_grad(x, y, spec, c.xy, false, grad);
  return grad;
}

Var mmd2(Var x, Var y, const KernelSpec& spec, Estimator estimator) {
  const double value = mmd2(x.value(), y.value(), spec, estimator);
  const Coefficients c = coefficients(x.value().dim(0), y.value().dim(0), estimator);
  return x.tape->record(
      estimator == Estimator::Biased ? "mmd2_biased" : "mmd2_unbiased", Tensor::scalar(value),
      {x, y}, [spec, c](const BackwardArgs& args) {
        const Tensor& xs = *args.inputs[0];
        const Tensor& ys = *args.inputs[1];
        const double up = args.output_grad[0];
        if (Tensor* gx = args.input_grads[0]) {
          Tensor g(xs.shape());
          accumulate_block_grad(xs, xs, spec, 2.0 * c.xx, c.skip_diagonal, g);
          accumulate_block_grad(xs, ys, spec, c.xy, false, g);
          for (std::size_t k = 0; k < g.size(); ++k) (*gx)[k] += up * g[k];
        }
        if (Tensor* gy = args.input_grads[1]) {
          Tensor g(ys.shape());
          accumulate_block_grad(ys, ys, spec, 2.0 * c.yy, c.skip_diagonal, g);
          accumulate_block_grad(ys, xs, spec, c.xy, false, g);
          for (std::size_t k = 0; k < g.size(); ++k) (*gy)[k] += up * g[k];
        }
      });
}

}  // namespace dtn
