#pragma once

#include <stdexcept>

namespace dtn {

/// Input data breaks a manifest or configuration invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The data cannot support the requested training or evaluation protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dtn
