#pragma once

#include <cmath>
#include <vector>

#include "dtn/tensor.hpp"

// Naive double-sum MMD^2 oracles written independently of the library path:
// direct kernel evaluation per pair and plain accumulation in loop order.
namespace dtn::testing {

inline double oracle_kernel(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j,
                            const std::vector<double>& sigmas) {
  const std::size_t d = a.dim(1);
  double d2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[i * d + k] - b[j * d + k];
    d2 += diff * diff;
  }
  double total = 0.0;
  for (double s : sigmas) total += std::exp(-d2 / (2.0 * s * s));
  return total;
}

inline double oracle_mmd2(const Tensor& x, const Tensor& y, const std::vector<double>& sigmas,
                          bool unbiased) {
  const std::size_t m = x.dim(0), n = y.dim(0);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t ii = 0; ii < m; ++ii)
      if (!unbiased || i != ii) sxx += oracle_kernel(x, i, x, ii, sigmas);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t jj = 0; jj < n; ++jj)
      if (!unbiased || j != jj) syy += oracle_kernel(y, j, y, jj, sigmas);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) sxy += oracle_kernel(x, i, y, j, sigmas);
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  if (unbiased) return sxx / (dm * (dm - 1)) + syy / (dn * (dn - 1)) - 2.0 * sxy / (dm * dn);
  return sxx / (dm * dm) + syy / (dn * dn) - 2.0 * sxy / (dm * dn);
}

}  // namespace dtn::testing
