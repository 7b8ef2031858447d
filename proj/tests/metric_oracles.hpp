#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dtn/metrics.hpp"

namespace dtn::testing {

/// Direct-count FAR/FRR.
inline ErrorRates oracle_far_frr(const std::vector<LabeledScore>& s, double tau) {
  double fa = 0, fakes = 0, fr = 0, genuines = 0;
  for (const auto& x : s) {
    if (x.label == Label::Fake) {
      fakes += 1;
      if (!(x.score < tau)) fa += 1;
    } else {
      genuines += 1;
      if (x.score < tau) fr += 1;
    }
  }
  return {fa / fakes, fr / genuines};
}

/// Exhaustive pairwise comparison, ties count one half.
inline double oracle_auc(const std::vector<LabeledScore>& s) {
  double wins = 0, pairs = 0;
  for (const auto& g : s) {
    if (g.label != Label::Genuine) continue;
    for (const auto& f : s) {
      if (f.label != Label::Fake) continue;
      pairs += 1;
      wins += g.score > f.score ? 1.0 : g.score == f.score ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

/// Brute-force sweep: every midpoint between each pair of distinct
/// scores that are adjacent in sorted order, plus the sentinels.
inline double oracle_eer_threshold(const std::vector<LabeledScore>& s) {
  std::vector<double> candidates{-std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity()};
  for (const auto& a : s) {
    double next = std::numeric_limits<double>::infinity();
    for (const auto& b : s) {
      if (b.score > a.score && b.score < next) next = b.score;
    }
    if (std::isfinite(next)) candidates.push_back((a.score + next) / 2.0);
  }
  double best = 0, best_gap = 2, best_far = 2;
  for (double t : candidates) {
    const ErrorRates e = oracle_far_frr(s, t);
    const double gap = std::abs(e.far - e.frr);
    if (gap < best_gap || (gap == best_gap && e.far < best_far) ||
        (gap == best_gap && e.far == best_far && t < best)) {
      best = t;
      best_gap = gap;
      best_far = e.far;
    }
  }
  return best;
}

}  // namespace dtn::testing
