#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"

namespace dtn {

enum class Pattern { Stripes, Checker };

/// Additive periodic texture: amplitude * wave(position along `angle_deg`).
struct Texture {
  Pattern pattern = Pattern::Stripes;
  double angle_deg = 0.0;
  double period = 4.0;  // pixels
  double amplitude = 0.0;
};

struct DomainStyle {
  double brightness = 0.0;  // added after contrast
  double contrast = 1.0;    // scales deviations from 0.5
  double noise = 0.02;      // per-pixel gaussian sigma
  /// Texture added to every image of the domain (sensor pattern).
  Texture sensor;
  /// Texture per spoof modality; the real modality carries none.
  std::map<std::string, Texture> spoof;
  std::size_t train_subjects = 12;
  std::size_t devel_subjects = 8;
  std::size_t test_subjects = 8;
};

/// Two-domain face-like benchmark. Each subject records, per modality,
/// `videos_per_modality` videos of `frames_per_video` frames.
struct SyntheticSpec {
  std::size_t side = 16;
  std::vector<std::string> modalities{"real", "print", "video"};
  DomainStyle source;
  DomainStyle target;
  std::size_t videos_per_modality = 1;
  std::size_t frames_per_video = 4;
  std::uint64_t seed = 1;

  /// The benchmark used by the cross-domain acceptance run.
  static SyntheticSpec defaults();
  /// Throws ValidationError on empty cells or non-finite styles.
  void validate() const;
};

struct SyntheticData {
  Dataset source;
  Dataset target;
};

/// Images are quantized to 8 bits, so the returned pixels equal what
/// load_manifest reads back from the written files.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes images/<domain>/... PGMs plus source.csv and target.csv under
/// `out_dir` and returns the same datasets as generate_synthetic.
SyntheticData write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace dtn
