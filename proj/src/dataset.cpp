#include "dtn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dtn/image_io.hpp"

namespace dtn {

std::string_view to_string(Domain d) { return d == Domain::Source ? "source" : "target"; }
std::string_view to_string(Label l) { return l == Label::Genuine ? "genuine" : "fake"; }
std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Devel: return "devel";
  }
  return "?";
}

Domain parse_domain(std::string_view t) {
  if (t == "source") return Domain::Source;
  if (t == "target") return Domain::Target;
  throw ValidationError("unknown domain '" + std::string(t) + "'");
}

Label parse_label(std::string_view t) {
  if (t == "genuine") return Label::Genuine;
  if (t == "fake") return Label::Fake;
  throw ValidationError("unknown label '" + std::string(t) + "'");
}

Split parse_split(std::string_view t) {
  if (t == "train") return Split::Train;
  if (t == "test") return Split::Test;
  if (t == "devel") return Split::Devel;
  throw ValidationError("unknown split '" + std::string(t) + "'");
}

namespace {

constexpr std::string_view kHeader = "path,domain,label,modality,subject,split,video,frame";
constexpr std::string_view kModalityTag = "# modalities:";

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

}  // namespace

Manifest parse_manifest(std::istream& in, const std::string& source_name) {
  Manifest m;
  std::string line;
  bool header_seen = false;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.starts_with('#')) {
      if (line.starts_with(kModalityTag)) {
        m.modalities.clear();
        for (std::string mod : split_commas(line.substr(kModalityTag.size()))) {
          mod = trim(mod);
          if (!mod.empty()) m.modalities.push_back(mod);
        }
        if (m.modalities.empty() || m.modalities.front() != kRealModality) {
          throw ValidationError(source_name + ": modality list must start with 'real'");
        }
      }
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) {
        throw ValidationError(source_name + ": expected header '" + std::string(kHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    ++data_row;
    const std::string where = source_name + " row " + std::to_string(data_row);
    const std::vector<std::string> f = split_commas(line);
    if (f.size() != 8) {
      throw ValidationError(where + ": expected 8 fields, got " + std::to_string(f.size()));
    }
    SampleRecord r;
    try {
      r.path = f[0];
      r.domain = parse_domain(f[1]);
      r.label = parse_label(f[2]);
      r.modality = f[3];
      r.subject = f[4];
      r.split = parse_split(f[5]);
      r.video = f[6];
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    const auto [ptr, ec] = std::from_chars(f[7].data(), f[7].data() + f[7].size(), r.frame);
    if (ec != std::errc() || ptr != f[7].data() + f[7].size() || r.frame < 0) {
      throw ValidationError(where + ": bad frame index '" + f[7] + "'");
    }
    if (r.path.empty() || r.subject.empty() || r.video.empty()) {
      throw ValidationError(where + ": empty path, subject or video id");
    }
    m.rows.push_back(std::move(r));
  }
  if (!header_seen) throw ValidationError(source_name + ": missing header row");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  return parse_manifest(in, path.string());
}

void write_manifest(const Manifest& manifest, std::ostream& out) {
  out << "# dtn manifest v1\n" << kModalityTag << ' ';
  for (std::size_t i = 0; i < manifest.modalities.size(); ++i) {
    out << (i ? "," : "") << manifest.modalities[i];
  }
  out << '\n' << kHeader << '\n';
  for (const SampleRecord& r : manifest.rows) {
    out << r.path << ',' << to_string(r.domain) << ',' << to_string(r.label) << ',' << r.modality
        << ',' << r.subject << ',' << to_string(r.split) << ',' << r.video << ',' << r.frame << '\n';
  }
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  write_manifest(manifest, out);
}

void validate_manifest(const Manifest& manifest) {
  const std::set<std::string> known(manifest.modalities.begin(), manifest.modalities.end());
  std::map<std::pair<Domain, std::string>, std::pair<Split, std::size_t>> first_split;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const SampleRecord& r = manifest.rows[i];
    const std::string where = "row " + std::to_string(i + 1);
    if (!known.contains(r.modality)) {
      throw ValidationError(where + ": unknown modality '" + r.modality + "'");
    }
    if ((r.label == Label::Genuine) != (r.modality == kRealModality)) {
      throw ValidationError(where + ": label " + std::string(to_string(r.label)) +
                            " inconsistent with modality '" + r.modality + "'");
    }
    const auto key = std::pair{r.domain, r.subject};
    const auto [it, inserted] = first_split.try_emplace(key, r.split, i + 1);
    if (!inserted && it->second.first != r.split) {
      throw ValidationError(where + ": subject '" + r.subject + "' appears in both " +
                            std::string(to_string(it->second.first)) + " (row " +
                            std::to_string(it->second.second) + ") and " +
                            std::string(to_string(r.split)));
    }
  }
}

Dataset::Dataset(std::vector<std::string> modalities, std::size_t side)
    : modalities_(std::move(modalities)), side_(side) {}

void Dataset::add(SampleRecord record, std::vector<double> pixels) {
  if (pixels.size() != side_ * side_) {
    throw ShapeError("sample has " + std::to_string(pixels.size()) + " pixels, expected " +
                     std::to_string(side_ * side_));
  }
  rows_.push_back(std::move(record));
  pixels_.push_back(std::move(pixels));
}

Tensor Dataset::images(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ShapeError("empty image selection");
  const std::size_t px = side_ * side_;
  Tensor out({indices.size(), 1, side_, side_});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& src = pixels_.at(indices[r]);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * px));
  }
  return out;
}

Tensor Dataset::all_images() const {
  std::vector<std::size_t> idx(size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return images(idx);
}

Dataset Dataset::filter(const std::function<bool(const SampleRecord&)>& keep) const {
  Dataset out(modalities_, side_);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (keep(rows_[i])) out.add(rows_[i], pixels_[i]);
  }
  return out;
}

std::vector<std::string> Dataset::subjects() const {
  std::set<std::string> s;
  for (const SampleRecord& r : rows_) s.insert(r.subject);
  return {s.begin(), s.end()};
}

Manifest Dataset::manifest() const { return Manifest{modalities_, rows_}; }

Dataset load_manifest(const std::filesystem::path& path, std::size_t side) {
  const Manifest m = read_manifest(path);
  validate_manifest(m);
  if (m.rows.empty()) throw ValidationError(path.string() + ": manifest has no samples");
  const std::filesystem::path base = path.parent_path();
  Dataset ds(m.modalities, side);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const SampleRecord& r = m.rows[i];
    const std::filesystem::path img_path =
        std::filesystem::path(r.path).is_absolute() ? std::filesystem::path(r.path) : base / r.path;
    GrayImage img;
    try {
      img = read_netpbm(img_path);
    } catch (const std::runtime_error& e) {
      throw ValidationError("row " + std::to_string(i + 1) + ": unreadable image: " + e.what());
    }
    ds.add(r, center_crop_resize(img, side));
  }
  return ds;
}

}  // namespace dtn
