#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"

namespace dtn {

enum class SplitScheme {
  /// Use the split column as given; the manifest must carry a devel split.
  Predefined,
  /// Manifest has train and test only; test subjects are halved into
  /// devel and a new test set.
  EqualSplitDevel,
};

struct ProtocolViews {
  Dataset train;
  Dataset devel;
  Dataset test;
};

/// Subject-disjoint train/devel/test views. Every view must hold both
/// classes; otherwise ProtocolError.
ProtocolViews split_protocol(const Dataset& dataset, SplitScheme scheme, std::uint64_t seed);

/// Subjects of `pool` carrying every declared modality, sorted.
std::vector<std::string> complete_subjects(const Dataset& pool);

/// Randomly picks k subjects from complete_subjects(pool); ProtocolError
/// when fewer are available. Result is sorted.
std::vector<std::string> select_subjects(const Dataset& pool, std::size_t k, std::uint64_t seed);

/// Rows of `dataset` whose subject is in `subjects`.
Dataset restrict_to_subjects(const Dataset& dataset, const std::vector<std::string>& subjects);

}  // namespace dtn
