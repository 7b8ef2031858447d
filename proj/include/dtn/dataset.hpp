#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtn/errors.hpp"
#include "dtn/tensor.hpp"

namespace dtn {

enum class Domain { Source, Target };
enum class Label { Genuine, Fake };
enum class Split { Train, Test, Devel };

std::string_view to_string(Domain d);
std::string_view to_string(Label l);
std::string_view to_string(Split s);
Domain parse_domain(std::string_view text);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

/// Modality of every genuine sample.
inline constexpr std::string_view kRealModality = "real";

/// One frame image with its protocol tags.
struct SampleRecord {
  std::string path;  // relative to the manifest directory, or absolute
  Domain domain = Domain::Source;
  Label label = Label::Genuine;
  std::string modality{kRealModality};
  std::string subject;
  Split split = Split::Train;
  std::string video;
  int frame = 0;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Rows of a manifest plus its declared modality set ("real" first).
struct Manifest {
  std::vector<std::string> modalities{"real", "print", "video"};
  std::vector<SampleRecord> rows;
};

/// Manifest text format, comma separated:
///
///   # dtn manifest v1
///   # modalities: real,print,video
///   path,domain,label,modality,subject,split,video,frame
///   images/s01_real_0.pgm,source,genuine,real,s01,train,s01-real-0,0
///
/// Lines starting with '#' are comments; the "# modalities:" comment
/// declares the modality set (default real,print,video). Fields may not
/// contain commas.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::istream& in, const std::string& source_name);
void write_manifest(const Manifest& manifest, std::ostream& out);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Checks genuine <=> real, declared modalities, and that no subject
/// appears in two splits of the same domain. Errors name the offending
/// row (1-based data row number) and throw ValidationError.
void validate_manifest(const Manifest& manifest);

/// Decoded samples. Images are single-channel side x side in [0, 1].
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> modalities, std::size_t side);

  void add(SampleRecord record, std::vector<double> pixels);

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t side() const { return side_; }
  const std::vector<std::string>& modalities() const { return modalities_; }
  const SampleRecord& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<SampleRecord>& rows() const { return rows_; }
  std::span<const double> pixels(std::size_t i) const { return pixels_.at(i); }

  /// [N, 1, side, side] batch of the selected rows.
  Tensor images(std::span<const std::size_t> indices) const;
  Tensor all_images() const;

  Dataset filter(const std::function<bool(const SampleRecord&)>& keep) const;
  std::vector<std::string> subjects() const;  // sorted, unique
  Manifest manifest() const;

 private:
  std::vector<std::string> modalities_;
  std::size_t side_ = 16;
  std::vector<SampleRecord> rows_;
  std::vector<std::vector<double>> pixels_;
};

/// Reads, validates, and decodes a manifest. Every image is center-cropped,
/// resized to `side` and scaled to [0, 1].
Dataset load_manifest(const std::filesystem::path& path, std::size_t side);

}  // namespace dtn
