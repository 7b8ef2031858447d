#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dtn/metrics.hpp"
#include "dtn/model.hpp"
#include "dtn/protocol.hpp"
#include "dtn/trainer.hpp"

namespace dtn {

/// Frame scores grouped by video, in order of first appearance; frames
/// are ordered by frame index. Reads images and video/subject ids only.
struct VideoFrames {
  std::string video;
  std::string subject;
  std::vector<double> frames;
};
std::vector<VideoFrames> score_videos(const ModelParams& params, const Dataset& data);

/// Records, in order, which label sets were read and when the threshold
/// was fixed. Events: "labels:<split>", "threshold".
class AccessLog {
 public:
  void record(std::string event) { events_.push_back(std::move(event)); }
  const std::vector<std::string>& events() const { return events_; }

 private:
  std::vector<std::string> events_;
};

/// Joins video labels onto scored videos, logging "labels:<split>".
std::vector<ScoreRecord> attach_labels(const std::vector<VideoFrames>& scored, const Dataset& data,
                                       const std::string& split, AccessLog* log);

struct VideoScore {
  std::string video;
  std::string subject;
  Label label = Label::Genuine;
  double score = 0.0;
};

struct EvalReport {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double hter = 0.0;
  double auc = 0.0;
  std::vector<VideoScore> test_videos;
  /// Videos per split and label, e.g. "devel/genuine".
  std::map<std::string, std::size_t> counts;
};

/// Picks tau at the EER of `devel` and applies it unchanged to `test`.
/// Test labels are read only after tau is fixed.
EvalReport evaluate(const ModelParams& params, const Dataset& devel, const Dataset& test,
                    AccessLog* log = nullptr);

/// Scores file: tab-separated, header "video_id subject_id label score".
void write_scores(const std::vector<VideoScore>& videos, std::ostream& out);
std::vector<VideoScore> video_scores(const std::vector<ScoreRecord>& records);

/// JSON document; infinite thresholds are written as "+inf"/"-inf".
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

struct CrossTestConfig {
  TrainConfig train;
  std::vector<Objective> objectives{Objective::StdCnn, Objective::Unsupervised,
                                    Objective::Semisupervised};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t labeled_subjects = 1;
  SplitScheme source_scheme = SplitScheme::Predefined;
  SplitScheme target_scheme = SplitScheme::Predefined;
  std::uint64_t split_seed = 0;
};

struct MethodRun {
  Objective objective = Objective::StdCnn;
  std::uint64_t seed = 0;
  std::vector<std::string> labeled_subjects;
  ModelParams params;
  std::vector<double> epoch_loss;
  EvalReport report;
};

struct MethodSummary {
  Objective objective = Objective::StdCnn;
  double median_hter = 0.0;
  double median_auc = 0.0;
  std::vector<double> hter;
  std::vector<double> auc;
};

struct CrossTestResult {
  ProtocolViews source;
  ProtocolViews target;
  std::vector<MethodRun> runs;
  std::vector<MethodSummary> summary;
};

/// Trains every objective for every seed on the source train split plus
/// k labeled target train subjects (chosen per seed, shared by the
/// objectives), fixes tau on the target devel split, and reports on the
/// target test split. With `out_dir` set, writes per run
///   <objective>-seed<s>/{model.ckpt, train.tsv, scores.tsv, report.json}
/// and comparison.tsv, summary.json at the top level.
CrossTestResult cross_test(const Dataset& source, const Dataset& target,
                           const CrossTestConfig& config,
                           const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                           AccessLog* log = nullptr);

double median(std::vector<double> values);

}  // namespace dtn
