#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtn/tape.hpp"

namespace dtn {

/// Mixture of Gaussian RBF kernels, k(x, y) = sum_i exp(-|x - y|^2 / (2 s_i^2)).
struct KernelSpec {
  std::vector<double> bandwidths{2.0, 5.0, 10.0, 20.0, 40.0, 80.0};

  static KernelSpec single(double sigma) { return KernelSpec{{sigma}}; }

  /// Throws std::invalid_argument on an empty list or a non-positive bandwidth.
  void validate() const;
  std::size_t components() const { return bandwidths.size(); }
};

double squared_distance(std::span<const double> x, std::span<const double> y);

double rbf_eval(std::span<const double> x, std::span<const double> y, double sigma);
double mixture_eval(std::span<const double> x, std::span<const double> y, const KernelSpec& spec);

/// G[i][j] = k(X_i, Y_j) for sample sets X [m,d] and Y [n,d].
Tensor gram(const Tensor& x, const Tensor& y, const KernelSpec& spec);

/// V-statistic: mean K(X,X) + mean K(Y,Y) - 2 mean K(X,Y). Needs m, n >= 1.
double mmd2_biased(const Tensor& x, const Tensor& y, const KernelSpec& spec);

/// U-statistic: off-diagonal means of K(X,X) and K(Y,Y) minus twice the
/// mean of K(X,Y). Needs m, n >= 2; may be negative.
double mmd2_unbiased(const Tensor& x, const Tensor& y, const KernelSpec& spec);

/// Every sum normalized by m/2 and the cross sum taken over i != j, with no
/// factor 2 on it. Needs m == n >= 2. Kept for comparison only; it is not an
/// unbiased estimate of MMD^2 and training never uses it.
double mmd2_half_normalized(const Tensor& x, const Tensor& y, const KernelSpec& spec);

enum class Estimator { Biased, Unbiased };

double mmd2(const Tensor& x, const Tensor& y, const KernelSpec& spec, Estimator estimator);

/// Differentiable MMD^2 between the rows of two tape values.
Var mmd2(Var x, Var y, const KernelSpec& spec, Estimator estimator);

/// d MMD^2 / d X, shaped like X.
Tensor mmd2_grad(const Tensor& x, const Tensor& y, const KernelSpec& spec, Estimator estimator);

}  // namespace dtn
