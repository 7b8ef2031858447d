#include "dtn/protocol.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

namespace dtn {

namespace {

void require_both_classes(const Dataset& view, const std::string& name) {
  bool genuine = false, fake = false;
  for (const SampleRecord& r : view.rows()) (r.label == Label::Genuine ? genuine : fake) = true;
  if (!genuine || !fake) {
    throw ProtocolError(name + " split needs genuine and fake samples (" +
                        std::to_string(view.size()) + " rows)");
  }
}

Dataset with_split(const Dataset& d, Split split) {
  return d.filter([split](const SampleRecord& r) { return r.split == split; });
}

}  // namespace

ProtocolViews split_protocol(const Dataset& dataset, SplitScheme scheme, std::uint64_t seed) {
  validate_manifest(dataset.manifest());
  ProtocolViews v{with_split(dataset, Split::Train), with_split(dataset, Split::Devel),
                  with_split(dataset, Split::Test)};
  if (scheme == SplitScheme::EqualSplitDevel) {
    if (!v.devel.empty()) {
      throw ProtocolError("equal-split-devel expects no devel rows, found " +
                          std::to_string(v.devel.size()));
    }
    std::vector<std::string> subjects = v.test.subjects();
    if (subjects.size() < 2) {
      throw ProtocolError("equal-split-devel needs at least 2 test subjects, found " +
                          std::to_string(subjects.size()));
    }
    std::mt19937_64 rng(seed);
    std::shuffle(subjects.begin(), subjects.end(), rng);
    const std::set<std::string> devel(subjects.begin(),
                                      subjects.begin() + static_cast<std::ptrdiff_t>(subjects.size() / 2));
    const Dataset test = v.test;
    v.devel = test.filter([&](const SampleRecord& r) { return devel.contains(r.subject); });
    v.test = test.filter([&](const SampleRecord& r) { return !devel.contains(r.subject); });
  }
  require_both_classes(v.train, "train");
  require_both_classes(v.devel, "devel");
  require_both_classes(v.test, "test");
  return v;
}

std::vector<std::string> complete_subjects(const Dataset& pool) {
  std::map<std::string, std::set<std::string>> seen;
  for (const SampleRecord& r : pool.rows()) seen[r.subject].insert(r.modality);
  std::vector<std::string> out;
  for (const auto& [subject, mods] : seen) {
    if (mods.size() == pool.modalities().size()) out.push_back(subject);
  }
  return out;
}

std::vector<std::string> select_subjects(const Dataset& pool, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> eligible = complete_subjects(pool);
  if (k == 0 || k > eligible.size()) {
    throw ProtocolError("cannot select " + std::to_string(k) + " labeled subjects; " +
                        std::to_string(eligible.size()) + " carry every modality");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(k);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

Dataset restrict_to_subjects(const Dataset& dataset, const std::vector<std::string>& subjects) {
  const std::set<std::string> keep(subjects.begin(), subjects.end());
  return dataset.filter([&](const SampleRecord& r) { return keep.contains(r.subject); });
}

}  // namespace dtn
