#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dtn/pipeline.hpp"
#include "dtn/synthetic.hpp"

namespace dtn {

/// key = value lines; '#' starts a comment. Keys (all optional):
///
///   train.objective train.lambda train.batch_size train.epochs
///   train.learning_rate train.seed train.bandwidths (comma list)
///   model.side
///   cross.seeds (comma list) cross.labeled_subjects cross.split_seed
///   cross.source_scheme cross.target_scheme (predefined | equal-split-devel)
///   synth.side synth.seed synth.frames_per_video synth.videos_per_modality
///   synth.<domain>.{brightness,contrast,noise}
///   synth.<domain>.{train,devel,test}_subjects
///   synth.<domain>.<texture>.{pattern,angle,period,amplitude}
///
/// where <domain> is source or target and <texture> is sensor or a spoof
/// modality name.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile read(const std::filesystem::path& path);
  static ConfigFile parse(const std::string& text, const std::string& source_name);

  bool empty() const { return entries_.empty(); }

  void apply(TrainConfig& train);
  void apply(CrossTestConfig& cross);
  void apply(SyntheticSpec& spec);
  /// Throws ValidationError naming the first key no apply() consumed.
  void check_all_used() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry* take(const std::string& key);
  template <typename T>
  void get(const std::string& key, T& out);

  std::string source_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

SplitScheme parse_scheme(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace dtn
