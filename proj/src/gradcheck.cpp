#include "dtn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace dtn {

std::string GradcheckReport::summary() const {
  std::ostringstream out;
  out << (passed ? "pass" : "FAIL") << " max_rel_err=" << max_rel_error << " checked=" << checked;
  if (checked) {
    out << " worst=(input " << worst_input << ", coord " << worst_coord << ", analytic "
        << worst_analytic << ", numeric " << worst_numeric << ")";
  }
  return out.str();
}

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& point) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : point) vars.push_back(tape.variable(t));
  return f(tape, vars).value().item();
}

}  // namespace

GradcheckReport finite_difference_gradcheck(const ScalarFn& f, const std::vector<Tensor>& point,
                                            GradcheckOptions options) {
  GradcheckReport report;
  std::vector<Tensor> analytic;
  try {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : point) vars.push_back(tape.variable(t));
    const Var root = f(tape, vars);
    const Gradients grads = tape.backward(root);
    for (Var v : vars) analytic.push_back(grads.of(v));
  } catch (const NumericError&) {
    report.passed = false;
    report.max_rel_error = std::numeric_limits<double>::infinity();
    return report;
  }

  std::mt19937_64 rng(options.seed);
  std::vector<Tensor> probe = point;
  for (std::size_t in = 0; in < point.size(); ++in) {
    std::vector<std::size_t> coords(point[in].size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords && coords.size() > options.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t k : coords) {
      const double x0 = point[in][k];
      double numeric = std::numeric_limits<double>::quiet_NaN();
      try {
        probe[in][k] = x0 + options.step;
        const double up = evaluate(f, probe);
        probe[in][k] = x0 - options.step;
        const double down = evaluate(f, probe);
        numeric = (up - down) / (2.0 * options.step);
      } catch (const NumericError&) {
        // reported as a non-finite error below
      }
      probe[in][k] = x0;
      const double a = analytic[in][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || !std::isfinite(rel)) {
        report.max_rel_error = rel;
        report.worst_input = in;
        report.worst_coord = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = std::isfinite(report.max_rel_error) && report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace dtn
