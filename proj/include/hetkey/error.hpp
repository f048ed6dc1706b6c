#pragma once

#include <stdexcept>
#include <string>

namespace hetkey {

// Raised on any parameter that violates a model or sampler precondition.
class InvalidParameter : public std::invalid_argument {
 public:
  explicit InvalidParameter(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace hetkey
