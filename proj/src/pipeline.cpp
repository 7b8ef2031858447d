#include "dtn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace dtn {

using nlohmann::json;

std::vector<VideoFrames> score_videos(const ModelParams& params, const Dataset& data) {
  if (data.empty()) throw ProtocolError("cannot score an empty dataset");
  const std::vector<double> p = genuine_probability(params, data.all_images());
  std::vector<VideoFrames> out;
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<std::pair<int, double>>> frames;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SampleRecord& r = data.row(i);
    const auto [it, inserted] = slot.try_emplace(r.video, out.size());
    if (inserted) {
      out.push_back({r.video, r.subject, {}});
      frames.emplace_back();
    }
    frames[it->second].emplace_back(r.frame, p[i]);
  }
  for (std::size_t v = 0; v < out.size(); ++v) {
    std::stable_sort(frames[v].begin(), frames[v].end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& f : frames[v]) out[v].frames.push_back(f.second);
  }
  return out;
}

std::vector<ScoreRecord> attach_labels(const std::vector<VideoFrames>& scored, const Dataset& data,
                                       const std::string& split, AccessLog* log) {
  if (log) log->record("labels:" + split);
  std::map<std::string, Label> labels;
  for (const SampleRecord& r : data.rows()) {
    const auto [it, inserted] = labels.try_emplace(r.video, r.label);
    if (!inserted && it->second != r.label) {
      throw ValidationError("video '" + r.video + "' mixes genuine and fake frames");
    }
  }
  std::vector<ScoreRecord> out;
  for (const VideoFrames& v : scored) {
    out.push_back({v.video, v.subject, labels.at(v.video), v.frames});
  }
  return out;
}

std::vector<VideoScore> video_scores(const std::vector<ScoreRecord>& records) {
  std::vector<VideoScore> out;
  for (const ScoreRecord& r : records) out.push_back({r.video, r.subject, r.label, aggregate_video(r)});
  return out;
}

namespace {

void count_videos(const std::vector<ScoreRecord>& records, const std::string& split,
                  std::map<std::string, std::size_t>& counts) {
  for (const ScoreRecord& r : records) ++counts[split + "/" + std::string(to_string(r.label))];
}

json threshold_json(double t) {
  if (std::isinf(t)) return t > 0 ? "+inf" : "-inf";
  return t;
}

double threshold_from(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("bad threshold '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

EvalReport evaluate(const ModelParams& params, const Dataset& devel, const Dataset& test,
                    AccessLog* log) {
  EvalReport rep;
  const auto dev_scored = score_videos(params, devel);
  const auto dev = attach_labels(dev_scored, devel, "devel", log);
  rep.threshold = eer_threshold(aggregate_videos(dev));
  if (log) log->record("threshold");

  const auto test_scored = score_videos(params, test);
  const auto tst = attach_labels(test_scored, test, "test", log);
  const auto test_scores = aggregate_videos(tst);
  const ErrorRates e = far_frr(test_scores, rep.threshold);
  rep.far = e.far;
  rep.frr = e.frr;
  rep.hter = hter(test_scores, rep.threshold);
  rep.auc = roc_auc(test_scores);
  rep.test_videos = video_scores(tst);
  count_videos(dev, "devel", rep.counts);
  count_videos(tst, "test", rep.counts);
  return rep;
}

void write_scores(const std::vector<VideoScore>& videos, std::ostream& out) {
  const auto old = out.precision(17);
  out << "video_id\tsubject_id\tlabel\tscore\n";
  for (const VideoScore& v : videos) {
    out << v.video << '\t' << v.subject << '\t' << to_string(v.label) << '\t' << v.score << '\n';
  }
  out.precision(old);
}

std::string report_to_json(const EvalReport& r) {
  json j;
  j["threshold"] = threshold_json(r.threshold);
  j["far"] = r.far;
  j["frr"] = r.frr;
  j["hter"] = r.hter;
  j["auc"] = r.auc;
  j["counts"] = r.counts;
  json videos = json::array();
  for (const VideoScore& v : r.test_videos) {
    videos.push_back({{"video", v.video}, {"subject", v.subject},
                      {"label", std::string(to_string(v.label))}, {"score", v.score}});
  }
  j["test_videos"] = std::move(videos);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const json j = json::parse(text);
    r.threshold = threshold_from(j.at("threshold"));
    r.far = j.at("far").get<double>();
    r.frr = j.at("frr").get<double>();
    r.hter = j.at("hter").get<double>();
    r.auc = j.at("auc").get<double>();
    r.counts = j.at("counts").get<std::map<std::string, std::size_t>>();
    for (const json& v : j.at("test_videos")) {
      r.test_videos.push_back({v.at("video").get<std::string>(), v.at("subject").get<std::string>(),
                               parse_label(v.at("label").get<std::string>()),
                               v.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

CrossTestResult cross_test(const Dataset& source, const Dataset& target,
                           const CrossTestConfig& config,
                           const std::optional<std::filesystem::path>& out_dir, AccessLog* log) {
  namespace fs = std::filesystem;
  if (config.seeds.empty() || config.objectives.empty()) {
    throw std::invalid_argument("cross-test needs at least one seed and one objective");
  }
  CrossTestResult result;
  result.source = split_protocol(source, config.source_scheme, config.split_seed);
  result.target = split_protocol(target, config.target_scheme, config.split_seed);
  if (out_dir) fs::create_directories(*out_dir);

  for (std::uint64_t seed : config.seeds) {
    const auto labeled = select_subjects(result.target.train, config.labeled_subjects, seed);
    const Dataset pool = restrict_to_subjects(result.target.train, labeled);
    for (Objective objective : config.objectives) {
      TrainConfig tc = config.train;
      tc.objective = objective;
      tc.seed = seed;
      MethodRun run;
      run.objective = objective;
      run.seed = seed;
      run.labeled_subjects = labeled;

      std::ostringstream train_log;
      TrainHooks hooks;
      hooks.log = &train_log;
      TrainResult trained = train(result.source.train, pool, tc, hooks);
      run.params = std::move(trained.params);
      run.epoch_loss = std::move(trained.epoch_loss);
      run.report = evaluate(run.params, result.target.devel, result.target.test, log);

      if (out_dir) {
        const fs::path dir = *out_dir / (std::string(to_string(objective)) + "-seed" + std::to_string(seed));
        fs::create_directories(dir);
        save_checkpoint(run.params, dir / "model.ckpt");
        std::ofstream(dir / "train.tsv", std::ios::binary) << train_log.str();
        std::ofstream scores(dir / "scores.tsv", std::ios::binary);
        write_scores(run.report.test_videos, scores);
        std::ofstream(dir / "report.json", std::ios::binary) << report_to_json(run.report);
      }
      result.runs.push_back(std::move(run));
    }
  }

  for (Objective objective : config.objectives) {
    MethodSummary s;
    s.objective = objective;
    for (const MethodRun& r : result.runs) {
      if (r.objective != objective) continue;
      s.hter.push_back(r.report.hter);
      s.auc.push_back(r.report.auc);
    }
    s.median_hter = median(s.hter);
    s.median_auc = median(s.auc);
    result.summary.push_back(std::move(s));
  }

  if (out_dir) {
    std::ofstream table(*out_dir / "comparison.tsv", std::ios::binary);
    table.precision(17);
    table << "method\tseed\tlabeled_subjects\tthreshold\tfar\tfrr\thter\tauc\n";
    for (const MethodRun& r : result.runs) {
      std::string subjects;
      for (const auto& s : r.labeled_subjects) subjects += (subjects.empty() ? "" : ";") + s;
      table << to_string(r.objective) << '\t' << r.seed << '\t' << subjects << '\t'
            << threshold_json(r.report.threshold).dump() << '\t' << r.report.far << '\t'
            << r.report.frr << '\t' << r.report.hter << '\t' << r.report.auc << '\n';
    }
    json summary = json::array();
    for (const MethodSummary& s : result.summary) {
      summary.push_back({{"method", std::string(to_string(s.objective))},
                         {"median_hter", s.median_hter},
                         {"median_auc", s.median_auc},
                         {"hter", s.hter},
                         {"auc", s.auc}});
    }
    std::ofstream(*out_dir / "summary.json", std::ios::binary) << summary.dump(2) << "\n";
  }
  return result;
}

}  // namespace dtn
