#include "dtn/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dtn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

Pattern parse_pattern(const std::string& s) {
  if (s == "stripes") return Pattern::Stripes;
  if (s == "checker") return Pattern::Checker;
  throw ValidationError("unknown pattern '" + s + "'");
}

}  // namespace

SplitScheme parse_scheme(const std::string& text) {
  if (text == "predefined") return SplitScheme::Predefined;
  if (text == "equal-split-devel") return SplitScheme::EqualSplitDevel;
  throw ValidationError("unknown split scheme '" + text + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(text)) {
    std::uint64_t v = 0;
    if (!parse_number(item, v)) throw ValidationError("bad seed '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty seed list");
  return out;
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source_name) {
  ConfigFile c;
  c.source_ = source_name;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(source_name + " line " + std::to_string(n) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || !c.entries_.try_emplace(key, Entry{trim(line.substr(eq + 1)), n}).second) {
      throw ValidationError(source_name + " line " + std::to_string(n) + ": empty or repeated key '" +
                            key + "'");
    }
  }
  return c;
}

ConfigFile ConfigFile::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str(), path.string());
}

const ConfigFile::Entry* ConfigFile::take(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

template <typename T>
void ConfigFile::get(const std::string& key, T& out) {
  const Entry* e = take(key);
  if (!e) return;
  const std::string where = source_ + " line " + std::to_string(e->line) + " (" + key + ")";
  if constexpr (std::is_same_v<T, std::string>) {
    out = e->value;
  } else {
    if (!parse_number(e->value, out)) throw ValidationError(where + ": bad number '" + e->value + "'");
  }
}

void ConfigFile::apply(TrainConfig& t) {
  if (const Entry* e = take("train.objective")) {
    try {
      t.objective = parse_objective(e->value);
    } catch (const std::invalid_argument& err) {
      throw ValidationError(source_ + " line " + std::to_string(e->line) + ": " + err.what());
    }
  }
  get("train.lambda", t.lambda);
  get("train.batch_size", t.batch_size);
  get("train.epochs", t.epochs);
  get("train.learning_rate", t.learning_rate);
  get("train.seed", t.seed);
  get("model.side", t.architecture.input_side);
  if (const Entry* e = take("train.bandwidths")) {
    t.kernel.bandwidths.clear();
    for (const std::string& item : split_list(e->value)) {
      double v = 0;
      if (!parse_number(item, v)) throw ValidationError("bad bandwidth '" + item + "'");
      t.kernel.bandwidths.push_back(v);
    }
  }
}

void ConfigFile::apply(CrossTestConfig& c) {
  apply(c.train);
  if (const Entry* e = take("cross.seeds")) c.seeds = parse_seed_list(e->value);
  get("cross.labeled_subjects", c.labeled_subjects);
  get("cross.split_seed", c.split_seed);
  if (const Entry* e = take("cross.source_scheme")) c.source_scheme = parse_scheme(e->value);
  if (const Entry* e = take("cross.target_scheme")) c.target_scheme = parse_scheme(e->value);
}

void ConfigFile::apply(SyntheticSpec& s) {
  get("synth.side", s.side);
  get("synth.seed", s.seed);
  get("synth.frames_per_video", s.frames_per_video);
  get("synth.videos_per_modality", s.videos_per_modality);
  for (const char* name : {"source", "target"}) {
    DomainStyle& d = std::string(name) == "source" ? s.source : s.target;
    const std::string p = std::string("synth.") + name + ".";
    get(p + "brightness", d.brightness);
    get(p + "contrast", d.contrast);
    get(p + "noise", d.noise);
    get(p + "train_subjects", d.train_subjects);
    get(p + "devel_subjects", d.devel_subjects);
    get(p + "test_subjects", d.test_subjects);
    std::vector<std::pair<std::string, Texture*>> textures{{"sensor", &d.sensor}};
    for (auto& [mod, tex] : d.spoof) textures.emplace_back(mod, &tex);
    for (auto& [mod, tex] : textures) {
      if (const Entry* e = take(p + mod + ".pattern")) tex->pattern = parse_pattern(e->value);
      get(p + mod + ".angle", tex->angle_deg);
      get(p + mod + ".period", tex->period);
      get(p + mod + ".amplitude", tex->amplitude);
    }
  }
}

void ConfigFile::check_all_used() const {
  for (const auto& [key, entry] : entries_) {
    if (!used_.contains(key)) {
      throw ValidationError(source_ + " line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace dtn
