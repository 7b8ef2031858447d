#include "dtn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "dtn/image_io.hpp"

namespace dtn {

SyntheticSpec SyntheticSpec::defaults() {
  SyntheticSpec s;
  s.source.brightness = 0.0;
  s.source.contrast = 1.0;
  s.source.noise = 0.02;
  s.source.spoof["print"] = {Pattern::Stripes, 0.0, 4.0, 0.10};
  s.source.spoof["video"] = {Pattern::Checker, 45.0, 3.0, 0.10};
  s.target.brightness = 0.12;
  s.target.contrast = 0.75;
  s.target.noise = 0.04;
  s.target.sensor = {Pattern::Stripes, 90.0, 2.0, 0.06};
  s.target.spoof["print"] = {Pattern::Stripes, 90.0, 5.0, 0.10};
  s.target.spoof["video"] = {Pattern::Checker, 0.0, 4.0, 0.10};
  return s;
}

namespace {

void check_texture(const Texture& t, const std::string& what) {
  if (!std::isfinite(t.angle_deg) || !std::isfinite(t.amplitude) || !std::isfinite(t.period) ||
      t.period <= 0.0) {
    throw ValidationError(what + ": texture needs finite values and a positive period");
  }
}

void check_style(const DomainStyle& d, const std::vector<std::string>& modalities,
                 const std::string& name) {
  if (!std::isfinite(d.brightness) || !std::isfinite(d.contrast) || !std::isfinite(d.noise) ||
      d.noise < 0.0) {
    throw ValidationError(name + ": photometric shift must be finite with noise >= 0");
  }
  if (d.train_subjects == 0 || d.devel_subjects == 0 || d.test_subjects == 0) {
    throw ValidationError(name + ": every split needs at least one subject");
  }
  check_texture(d.sensor, name + " sensor");
  for (std::size_t i = 1; i < modalities.size(); ++i) {
    const auto it = d.spoof.find(modalities[i]);
    if (it == d.spoof.end()) {
      throw ValidationError(name + ": no texture for modality '" + modalities[i] + "'");
    }
    check_texture(it->second, name + " " + modalities[i]);
  }
}

double texture_at(const Texture& t, double x, double y, double phase) {
  if (t.amplitude == 0.0) return 0.0;
  const double a = t.angle_deg * std::numbers::pi / 180.0;
  const double w = 2.0 * std::numbers::pi / t.period;
  const double u = x * std::cos(a) + y * std::sin(a);
  if (t.pattern == Pattern::Stripes) return t.amplitude * std::sin(w * u + phase);
  const double v = -x * std::sin(a) + y * std::cos(a);
  return t.amplitude * std::sin(w * u + phase) * std::sin(w * v + phase);
}

struct Face {
  double cx, cy, width, skin, background, eye_depth;
};

Face draw_face(std::mt19937_64& rng, std::size_t side) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double c = (static_cast<double>(side) - 1.0) / 2.0;
  const double s = static_cast<double>(side);
  return {c + (u(rng) - 0.5) * 0.12 * s, c + (u(rng) - 0.5) * 0.12 * s, s * (0.22 + 0.08 * u(rng)),
          0.45 + 0.2 * u(rng), 0.15 + 0.15 * u(rng), 0.12 + 0.1 * u(rng)};
}

std::vector<std::uint8_t> render(const Face& face, const DomainStyle& style, const Texture* spoof,
                                 std::size_t side, double jx, double jy, double phase,
                                 double sensor_phase, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double s = static_cast<double>(side);
  const double eye_dx = 0.18 * s, eye_dy = -0.12 * s, eye_r = 0.06 * s;
  std::vector<std::uint8_t> out(side * side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      const double dx = x - face.cx - jx, dy = y - face.cy - jy;
      const double blob = std::exp(-(dx * dx + dy * dy) / (2.0 * face.width * face.width));
      double v = face.background + (face.skin - face.background) * blob;
      for (double side_sign : {-1.0, 1.0}) {
        const double ex = dx - side_sign * eye_dx, ey = dy - eye_dy;
        v -= face.eye_depth * std::exp(-(ex * ex + ey * ey) / (2.0 * eye_r * eye_r));
      }
      if (spoof) v += texture_at(*spoof, x, y, phase);
      v += texture_at(style.sensor, x, y, sensor_phase);
      v = 0.5 + style.contrast * (v - 0.5) + style.brightness;
      v += style.noise * noise(rng);
      const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
      out[r * side + c] = static_cast<std::uint8_t>(q);
    }
  }
  return out;
}

std::vector<double> to_unit(const std::vector<std::uint8_t>& bytes) {
  const double scale = 1.0 / 255.0;
  std::vector<double> px(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) px[i] = static_cast<double>(bytes[i]) * scale;
  return px;
}

std::string pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

using Sink = std::function<void(SampleRecord, const std::vector<std::uint8_t>&)>;

void generate_domain(const SyntheticSpec& spec, Domain domain, const Sink& sink) {
  const DomainStyle& style = domain == Domain::Source ? spec.source : spec.target;
  const std::string tag = domain == Domain::Source ? "src" : "tgt";
  const std::uint64_t domain_id = domain == Domain::Source ? 0 : 1;
  const std::pair<Split, std::size_t> splits[] = {{Split::Train, style.train_subjects},
                                                  {Split::Devel, style.devel_subjects},
                                                  {Split::Test, style.test_subjects}};
  std::size_t subject_index = 0;
  for (const auto& [split, count] : splits) {
    for (std::size_t s = 0; s < count; ++s, ++subject_index) {
      const std::string subject = tag + "-s" + pad(subject_index + 1, 3);
      std::seed_seq face_seed{spec.seed, domain_id, static_cast<std::uint64_t>(subject_index), std::uint64_t{0}};
      std::mt19937_64 face_rng(face_seed);
      const Face face = draw_face(face_rng, spec.side);
      for (std::size_t m = 0; m < spec.modalities.size(); ++m) {
        const std::string& modality = spec.modalities[m];
        const Texture* spoof = m == 0 ? nullptr : &style.spoof.at(modality);
        for (std::size_t v = 0; v < spec.videos_per_modality; ++v) {
          std::seed_seq video_seed{spec.seed, domain_id, static_cast<std::uint64_t>(subject_index),
                                   static_cast<std::uint64_t>(m + 1), static_cast<std::uint64_t>(v)};
          std::mt19937_64 rng(video_seed);
          std::uniform_real_distribution<double> u(0.0, 1.0);
          const double phase = 2.0 * std::numbers::pi * u(rng);
          const double sensor_phase = 2.0 * std::numbers::pi * u(rng);
          const std::string video = subject + "-" + modality + "-" + pad(v, 2);
          for (std::size_t f = 0; f < spec.frames_per_video; ++f) {
            const double jx = (u(rng) - 0.5), jy = (u(rng) - 0.5);
            const double drift = 0.3 * static_cast<double>(f);
            SampleRecord rec;
            rec.path = "images/" + tag + "/" + video + "-f" + pad(f, 2) + ".pgm";
            rec.domain = domain;
            rec.label = m == 0 ? Label::Genuine : Label::Fake;
            rec.modality = modality;
            rec.subject = subject;
            rec.split = split;
            rec.video = video;
            rec.frame = static_cast<int>(f);
            sink(std::move(rec), render(face, style, spoof, spec.side, jx, jy, phase + drift,
                                        sensor_phase, rng));
          }
        }
      }
    }
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (side < 4) throw ValidationError("synthetic side must be at least 4");
  if (modalities.size() < 2 || modalities.front() != kRealModality) {
    throw ValidationError("synthetic modalities must start with 'real' and include a spoof");
  }
  if (std::set<std::string>(modalities.begin(), modalities.end()).size() != modalities.size()) {
    throw ValidationError("synthetic modalities must be distinct");
  }
  if (videos_per_modality == 0 || frames_per_video == 0) {
    throw ValidationError("synthetic videos and frames per cell must be positive");
  }
  check_style(source, modalities, "source");
  check_style(target, modalities, "target");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData out{Dataset(spec.modalities, spec.side), Dataset(spec.modalities, spec.side)};
  generate_domain(spec, Domain::Source, [&](SampleRecord r, const std::vector<std::uint8_t>& px) {
    out.source.add(std::move(r), to_unit(px));
  });
  generate_domain(spec, Domain::Target, [&](SampleRecord r, const std::vector<std::uint8_t>& px) {
    out.target.add(std::move(r), to_unit(px));
  });
  return out;
}

SyntheticData write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images" / "src");
  fs::create_directories(out_dir / "images" / "tgt");
  SyntheticData out{Dataset(spec.modalities, spec.side), Dataset(spec.modalities, spec.side)};
  for (Domain d : {Domain::Source, Domain::Target}) {
    Dataset& ds = d == Domain::Source ? out.source : out.target;
    generate_domain(spec, d, [&](SampleRecord r, const std::vector<std::uint8_t>& px) {
      write_pgm(out_dir / r.path, spec.side, spec.side, px);
      ds.add(std::move(r), to_unit(px));
    });
  }
  write_manifest(out.source.manifest(), out_dir / "source.csv");
  write_manifest(out.target.manifest(), out_dir / "target.csv");
  return out;
}

}  // namespace dtn
