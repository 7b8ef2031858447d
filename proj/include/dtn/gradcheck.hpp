#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dtn/tape.hpp"

namespace dtn {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Check at most this many coordinates per input (0 = all). Coordinates
  /// are picked deterministically from `seed`.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradcheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_input = 0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  std::string summary() const;
};

/// Builds a scalar from variables on a fresh tape.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients of `f` at `point` with central
/// differences (f(x+h) - f(x-h)) / 2h, coordinate by coordinate. Never
/// throws on mismatch; inspect the report.
GradcheckReport finite_difference_gradcheck(const ScalarFn& f, const std::vector<Tensor>& point,
                                            GradcheckOptions options = {});

}  // namespace dtn
