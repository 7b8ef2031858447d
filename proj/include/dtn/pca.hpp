#pragma once

#include <cstddef>
#include <vector>

#include "dtn/tensor.hpp"

namespace dtn {

struct PcaProjection {
  Tensor projected;                 // [N, components]
  std::vector<double> variance;     // per component, non-increasing
  Tensor components;                // [components, f], unit rows
  std::vector<double> mean;         // length f
};

/// Projects mean-centered rows of `features` [N, f] onto the leading
/// eigenvectors of their covariance (divisor N - 1). Each component's sign
/// makes its largest-magnitude loading positive. Requires N > components
/// and components <= f; trailing zero-variance components are allowed.
PcaProjection pca_project(const Tensor& features, std::size_t components = 3);

}  // namespace dtn
