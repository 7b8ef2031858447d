#include "dtn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dtn {

namespace {

struct ClassCounts {
  std::size_t genuine = 0;
  std::size_t fake = 0;
};

ClassCounts require_both(const std::vector<LabeledScore>& scores) {
  ClassCounts c;
  for (const LabeledScore& s : scores) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("non-finite score");
    (s.label == Label::Genuine ? c.genuine : c.fake)++;
  }
  if (c.genuine == 0 || c.fake == 0) {
    throw std::invalid_argument("metrics need at least one genuine and one fake score");
  }
  return c;
}

}  // namespace

double aggregate_video(const ScoreRecord& record) {
  if (record.frames.empty()) {
    throw std::invalid_argument("video '" + record.video + "' has no frame scores");
  }
  double sum = 0.0;
  for (double f : record.frames) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw std::invalid_argument("video '" + record.video + "' has a score outside [0, 1]");
    }
    sum += f;
  }
  return sum / static_cast<double>(record.frames.size());
}

std::vector<LabeledScore> aggregate_videos(const std::vector<ScoreRecord>& records) {
  std::vector<LabeledScore> out;
  out.reserve(records.size());
  for (const ScoreRecord& r : records) out.push_back({aggregate_video(r), r.label});
  return out;
}

ErrorRates far_frr(const std::vector<LabeledScore>& scores, double tau) {
  const ClassCounts c = require_both(scores);
  std::size_t accepted_fakes = 0, rejected_genuines = 0;
  for (const LabeledScore& s : scores) {
    if (s.label == Label::Fake && s.score >= tau) ++accepted_fakes;
    if (s.label == Label::Genuine && s.score < tau) ++rejected_genuines;
  }
  return {static_cast<double>(accepted_fakes) / static_cast<double>(c.fake),
          static_cast<double>(rejected_genuines) / static_cast<double>(c.genuine)};
}

double eer_threshold(const std::vector<LabeledScore>& dev) {
  require_both(dev);
  std::vector<double> values;
  for (const LabeledScore& s : dev) values.push_back(s.score);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    candidates.push_back((values[i] + values[i + 1]) / 2.0);
  }
  candidates.push_back(std::numeric_limits<double>::infinity());

  double best_tau = candidates.front();
  double best_gap = std::numeric_limits<double>::infinity();
  double best_far = std::numeric_limits<double>::infinity();
  for (double tau : candidates) {
    const ErrorRates e = far_frr(dev, tau);
    const double gap = std::abs(e.far - e.frr);
    if (gap < best_gap || (gap == best_gap && e.far < best_far)) {
      best_tau = tau;
      best_gap = gap;
      best_far = e.far;
    }
  }
  return best_tau;
}

double hter(const std::vector<LabeledScore>& scores, double tau) {
  const ErrorRates e = far_frr(scores, tau);
  return (e.far + e.frr) / 2.0;
}

double roc_auc(const std::vector<LabeledScore>& scores) {
  const ClassCounts c = require_both(scores);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
  double genuine_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]].score == scores[order[i]].score) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (scores[order[k]].label == Label::Genuine) genuine_rank_sum += mid_rank;
    }
    i = j;
  }
  const double g = static_cast<double>(c.genuine), f = static_cast<double>(c.fake);
  return (genuine_rank_sum - g * (g + 1.0) / 2.0) / (g * f);
}

}  // namespace dtn
