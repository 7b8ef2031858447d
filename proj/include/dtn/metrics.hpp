#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"

namespace dtn {

/// Frame scores of one video. Scores are genuine probabilities in [0, 1].
struct ScoreRecord {
  std::string video;
  std::string subject;
  Label label = Label::Genuine;
  std::vector<double> frames;
};

/// Video-level score.
struct LabeledScore {
  double score = 0.0;
  Label label = Label::Genuine;
};

/// Mean of the frame scores; throws std::invalid_argument when empty or
/// out of [0, 1].
double aggregate_video(const ScoreRecord& record);
std::vector<LabeledScore> aggregate_videos(const std::vector<ScoreRecord>& records);

struct ErrorRates {
  double far = 0.0;  // fakes with score >= tau, over fakes
  double frr = 0.0;  // genuines with score < tau, over genuines
};

/// All functions below require at least one genuine and one fake score
/// and throw std::invalid_argument otherwise. A score is accepted as
/// genuine when score >= tau.
ErrorRates far_frr(const std::vector<LabeledScore>& scores, double tau);

/// Minimizes |FAR - FRR| over -inf, +inf and the midpoints of adjacent
/// distinct scores; ties go to the smaller FAR, then the smaller tau.
double eer_threshold(const std::vector<LabeledScore>& dev);

double hter(const std::vector<LabeledScore>& scores, double tau);

/// P(genuine score > fake score) + 0.5 P(tie), via mid-ranks.
double roc_auc(const std::vector<LabeledScore>& scores);

}  // namespace dtn
