#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dtn/dataset.hpp"
#include "dtn/image_io.hpp"
#include "dtn/kernel_mmd.hpp"
#include "dtn/protocol.hpp"
#include "dtn/synthetic.hpp"

using namespace dtn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("dtn-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

SampleRecord row(std::string subject, Split split, std::string modality, int frame = 0) {
  SampleRecord r;
  r.path = "img.pgm";
  r.label = modality == "real" ? Label::Genuine : Label::Fake;
  r.modality = modality;
  r.subject = subject;
  r.split = split;
  r.video = subject + "-" + modality;
  r.frame = frame;
  return r;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("netpbm decoding covers ascii, binary, 16-bit and rgb") {
  TempDir dir("netpbm");
  write_text(dir.path / "a.pgm", "P2\n# comment\n2 2\n4\n0 1\n2 4\n");
  const GrayImage a = read_netpbm(dir.path / "a.pgm");
  CHECK(a.width == 2);
  CHECK(a.pixels == std::vector<double>{0.0, 0.25, 0.5, 1.0});

  write_text(dir.path / "b.pgm", std::string("P5\n2 1\n65535\n") + '\xff' + '\xff' + '\x00' + '\x00');
  CHECK(read_netpbm(dir.path / "b.pgm").pixels == std::vector<double>{1.0, 0.0});

  write_text(dir.path / "c.ppm", "P3\n1 1\n255\n255 0 0\n");
  CHECK(read_netpbm(dir.path / "c.ppm").pixels[0] == doctest::Approx(0.299).epsilon(1e-12));

  const std::vector<std::uint8_t> bytes{0, 51, 102, 153, 204, 255};
  write_pgm(dir.path / "d.pgm", 3, 2, bytes);
  const GrayImage d = read_netpbm(dir.path / "d.pgm");
  CHECK(d.height == 2);
  CHECK(d.pixels[5] == 1.0);

  write_text(dir.path / "bad.pgm", "P5\n2 2\n255\n\x01");
  CHECK_THROWS_AS(read_netpbm(dir.path / "bad.pgm"), std::runtime_error);
  CHECK_THROWS_AS(read_netpbm(dir.path / "missing.pgm"), std::runtime_error);
}

TEST_CASE("center crop resize") {
  GrayImage img{4, 4, {}};
  for (int i = 0; i < 16; ++i) img.pixels.push_back(i / 15.0);
  CHECK(center_crop_resize(img, 4) == img.pixels);

  GrayImage wide{6, 2, std::vector<double>(12, 0.3)};
  wide.pixels[0] = 1.0;  // outside the central 2x2 crop
  for (double v : center_crop_resize(wide, 5)) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

  GrayImage ramp{2, 2, {0.0, 1.0, 0.0, 1.0}};
  const auto up = center_crop_resize(ramp, 4);
  CHECK(up[0] == 0.0);
  CHECK(up[3] == 1.0);
  CHECK(up[1] == doctest::Approx(0.25));
}

TEST_CASE("manifest round trip preserves rows") {
  TempDir dir("roundtrip");
  Manifest m;
  m.modalities = {"real", "print", "video", "mask"};
  m.rows = {row("s1", Split::Train, "real"), row("s1", Split::Train, "mask", 3),
            row("s2", Split::Test, "print"), row("s3", Split::Devel, "video", 7)};
  m.rows[1].domain = Domain::Target;
  write_manifest(m, dir.path / "m.csv");
  const Manifest back = read_manifest(dir.path / "m.csv");
  CHECK(back.modalities == m.modalities);
  CHECK(back.rows == m.rows);
  validate_manifest(back);
}

TEST_CASE("manifest validation names the offending row") {
  Manifest leak;
  leak.rows = {row("alice", Split::Train, "real"), row("bob", Split::Test, "real"),
               row("alice", Split::Test, "print")};
  const std::string msg = error_of([&] { validate_manifest(leak); });
  CHECK(msg.find("row 3") != std::string::npos);
  CHECK(msg.find("alice") != std::string::npos);
  CHECK_THROWS_AS(validate_manifest(leak), ValidationError);

  // Same subject id in another domain is a different person.
  Manifest cross;
  cross.rows = {row("alice", Split::Train, "real"), row("alice", Split::Test, "real")};
  cross.rows[1].domain = Domain::Target;
  CHECK_NOTHROW(validate_manifest(cross));

  Manifest unknown;
  unknown.rows = {row("a", Split::Train, "real"), row("a", Split::Train, "mask")};
  CHECK(error_of([&] { validate_manifest(unknown); }).find("row 2: unknown modality") !=
        std::string::npos);

  Manifest mislabeled;
  mislabeled.rows = {row("a", Split::Train, "print")};
  mislabeled.rows[0].label = Label::Genuine;
  CHECK(error_of([&] { validate_manifest(mislabeled); }).find("row 1") != std::string::npos);

  std::istringstream bad_field("path,domain,label,modality,subject,split,video,frame\n"
                               "x.pgm,source,genuine,real,s,train,v,0\n"
                               "x.pgm,source,genuine,real,s,holdout,v,1\n");
  CHECK(error_of([&] { parse_manifest(bad_field, "m"); }).find("m row 2") != std::string::npos);

  std::istringstream bad_frame("path,domain,label,modality,subject,split,video,frame\n"
                               "x.pgm,source,genuine,real,s,train,v,-1\n");
  CHECK_THROWS_AS(parse_manifest(bad_frame, "m"), ValidationError);

  std::istringstream no_header("x.pgm,source,genuine,real,s,train,v,0\n");
  CHECK_THROWS_AS(parse_manifest(no_header, "m"), ValidationError);
}

TEST_CASE("load_manifest reports unreadable images and empty manifests") {
  TempDir dir("unreadable");
  Manifest m;
  m.rows = {row("a", Split::Train, "real")};
  m.rows[0].path = "nope.pgm";
  write_manifest(m, dir.path / "m.csv");
  const std::string msg = error_of([&] { load_manifest(dir.path / "m.csv", 8); });
  CHECK(msg.find("row 1: unreadable image") != std::string::npos);

  write_manifest(Manifest{}, dir.path / "empty.csv");
  CHECK_THROWS_AS(load_manifest(dir.path / "empty.csv", 8), ValidationError);
}

TEST_CASE("replay-fixed shaped manifest loads with matching cell counts") {
  TempDir dir("replay");
  write_text(dir.path / "face.ppm", std::string("P6\n6 4\n255\n") + std::string(72, '\x80'));
  Manifest m;
  m.modalities = {"real", "video", "print"};
  const std::pair<Split, int> splits[] = {{Split::Train, 30}, {Split::Test, 40}, {Split::Devel, 30}};
  int subject = 0;
  for (const auto& [split, count] : splits) {
    for (int s = 0; s < count; ++s, ++subject) {
      const std::string id = "c" + std::to_string(subject);
      SampleRecord g = row(id, split, "real");
      g.path = "face.ppm";
      m.rows.push_back(g);
      for (int v = 0; v < 4; ++v) {
        SampleRecord r = row(id, split, "video");
        r.path = "face.ppm";
        r.video += std::to_string(v);
        m.rows.push_back(r);
      }
      SampleRecord p = row(id, split, "print");
      p.path = "face.ppm";
      m.rows.push_back(p);
    }
  }
  write_manifest(m, dir.path / "replay.csv");
  const Dataset ds = load_manifest(dir.path / "replay.csv", 8);
  std::map<std::pair<Split, std::string>, int> cells;
  for (const SampleRecord& r : ds.rows()) ++cells[{r.split, r.modality}];
  CHECK(cells[{Split::Train, "real"}] == 30);
  CHECK(cells[{Split::Train, "video"}] == 120);
  CHECK(cells[{Split::Train, "print"}] == 30);
  CHECK(cells[{Split::Test, "real"}] == 40);
  CHECK(cells[{Split::Test, "video"}] == 160);
  CHECK(cells[{Split::Test, "print"}] == 40);
  CHECK(cells[{Split::Devel, "real"}] == 30);
  CHECK(cells[{Split::Devel, "video"}] == 120);
  CHECK(cells[{Split::Devel, "print"}] == 30);
  CHECK(ds.images(std::vector<std::size_t>{0}).shape() == Shape{1, 1, 8, 8});
  CHECK(ds.pixels(0)[0] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("synthetic benchmark: counts, determinism, on-disk equality") {
  SyntheticSpec spec = SyntheticSpec::defaults();
  spec.source.train_subjects = 3;
  spec.source.devel_subjects = 2;
  spec.source.test_subjects = 2;
  spec.target.train_subjects = 2;
  spec.target.devel_subjects = 2;
  spec.target.test_subjects = 1;
  spec.frames_per_video = 2;
  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  REQUIRE(a.source.size() == 7 * 3 * 2);
  REQUIRE(a.target.size() == 5 * 3 * 2);
  for (std::size_t i = 0; i < a.source.size(); ++i) {
    CHECK(std::ranges::equal(a.source.pixels(i), b.source.pixels(i)));
  }
  std::map<std::pair<Split, Label>, int> cells;
  for (const SampleRecord& r : a.source.rows()) ++cells[{r.split, r.label}];
  CHECK(cells[{Split::Train, Label::Genuine}] == 3 * 2);
  CHECK(cells[{Split::Train, Label::Fake}] == 3 * 2 * 2);
  CHECK(cells[{Split::Test, Label::Genuine}] == 2 * 2);

  spec.seed = 2;
  CHECK_FALSE(std::ranges::equal(generate_synthetic(spec).source.pixels(0), a.source.pixels(0)));
  spec.seed = 1;

  TempDir dir("synth");
  const SyntheticData written = write_synthetic(spec, dir.path);
  const Dataset loaded = load_manifest(dir.path / "target.csv", spec.side);
  REQUIRE(loaded.size() == written.target.size());
  CHECK(loaded.rows() == written.target.rows());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(std::ranges::equal(loaded.pixels(i), written.target.pixels(i)));
  }
  CHECK(std::ranges::equal(written.source.pixels(3), a.source.pixels(3)));
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec = SyntheticSpec::defaults();
  spec.target.test_subjects = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = SyntheticSpec::defaults();
  spec.modalities.push_back("mask");
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = SyntheticSpec::defaults();
  spec.source.brightness = std::nan("");
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = SyntheticSpec::defaults();
  spec.frames_per_video = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("default benchmark has a real pixel-space domain gap") {
  const SyntheticData d = generate_synthetic(SyntheticSpec::defaults());
  auto train = [](const Dataset& ds) {
    return ds.filter([](const SampleRecord& r) { return r.split == Split::Train; });
  };
  const Dataset s = train(d.source), t = train(d.target);
  const std::size_t px = s.side() * s.side();
  const Tensor xs = s.all_images().reshaped({s.size(), px});
  const Tensor xt = t.all_images().reshaped({t.size(), px});
  const double gap = mmd2_biased(xs, xt, KernelSpec{});
  MESSAGE("raw pixel MMD^2 = " << gap);
  CHECK(gap > 0.1);
}

TEST_CASE("equal-split-devel halves test subjects disjointly") {
  Dataset ds({"real", "print"}, 2);
  const std::vector<double> px(4, 0.5);
  for (int s = 0; s < 6; ++s) {
    for (const char* m : {"real", "print"}) ds.add(row("tr" + std::to_string(s), Split::Train, m), px);
  }
  for (int s = 0; s < 20; ++s) {
    for (const char* m : {"real", "print"}) ds.add(row("te" + std::to_string(s), Split::Test, m), px);
  }
  const ProtocolViews v = split_protocol(ds, SplitScheme::EqualSplitDevel, 11);
  CHECK(v.devel.subjects().size() == 10);
  CHECK(v.test.subjects().size() == 10);
  CHECK(v.train.subjects().size() == 6);
  CHECK(v.devel.size() + v.test.size() + v.train.size() == ds.size());
  const ProtocolViews again = split_protocol(ds, SplitScheme::EqualSplitDevel, 11);
  CHECK(again.devel.subjects() == v.devel.subjects());
  const ProtocolViews other = split_protocol(ds, SplitScheme::EqualSplitDevel, 12);
  CHECK(other.devel.subjects() != v.devel.subjects());

  CHECK_THROWS_AS(split_protocol(ds, SplitScheme::Predefined, 1), ProtocolError);
  CHECK_THROWS_AS(split_protocol(v.devel, SplitScheme::EqualSplitDevel, 1), ProtocolError);
}

TEST_CASE("protocol splits are subject-disjoint on randomized manifests") {
  std::mt19937_64 rng(20261015);
  const std::vector<double> px(4, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const bool has_devel = trial % 2 == 0;
    Dataset ds({"real", "print", "video"}, 2);
    const int subjects = std::uniform_int_distribution<int>(6, 30)(rng);
    for (int s = 0; s < subjects; ++s) {
      // The first subjects guarantee every split holds both classes.
      Split split = s < 2 ? Split::Train : s < 4 ? Split::Test : has_devel && s < 6 ? Split::Devel
                                                                                  : Split::Train;
      if (s >= 6) {
        const int pick = std::uniform_int_distribution<int>(0, has_devel ? 2 : 1)(rng);
        split = pick == 0 ? Split::Train : pick == 1 ? Split::Test : Split::Devel;
      }
      const int frames = std::uniform_int_distribution<int>(1, 3)(rng);
      for (const char* m : {"real", "print", "video"}) {
        for (int f = 0; f < frames; ++f) ds.add(row("p" + std::to_string(s), split, m, f), px);
      }
    }
    const ProtocolViews v =
        split_protocol(ds, has_devel ? SplitScheme::Predefined : SplitScheme::EqualSplitDevel, trial);
    std::set<std::string> tr, de, te;
    for (const auto& s : v.train.subjects()) tr.insert(s);
    for (const auto& s : v.devel.subjects()) de.insert(s);
    for (const auto& s : v.test.subjects()) te.insert(s);
    for (const auto& s : tr) CHECK((!de.contains(s) && !te.contains(s)));
    for (const auto& s : de) CHECK(!te.contains(s));
    CHECK(tr.size() + de.size() + te.size() == ds.subjects().size());
    CHECK(v.train.size() + v.devel.size() + v.test.size() == ds.size());
  }
}

TEST_CASE("labeled subject selection") {
  Dataset ds({"real", "print", "video"}, 2);
  const std::vector<double> px(4, 0.5);
  for (int s = 0; s < 5; ++s) {
    for (const char* m : {"real", "print", "video"}) ds.add(row("s" + std::to_string(s), Split::Train, m), px);
  }
  ds.add(row("partial", Split::Train, "real"), px);
  CHECK(complete_subjects(ds).size() == 5);
  const auto one = select_subjects(ds, 1, 3);
  REQUIRE(one.size() == 1);
  CHECK(one != std::vector<std::string>{"partial"});
  CHECK(select_subjects(ds, 1, 3) == one);
  std::set<std::string> picked;
  for (std::uint64_t seed = 0; seed < 40; ++seed) picked.insert(select_subjects(ds, 1, seed)[0]);
  CHECK(picked.size() == 5);
  CHECK(select_subjects(ds, 5, 0).size() == 5);
  CHECK_THROWS_AS(select_subjects(ds, 6, 0), ProtocolError);
  CHECK_THROWS_AS(select_subjects(ds, 0, 0), ProtocolError);
  CHECK(restrict_to_subjects(ds, one).size() == 3);
}
