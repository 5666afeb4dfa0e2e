#pragma once

#include <stdexcept>
#include <string>

namespace falris {

// Input data violates a documented invariant (ranges, shapes, class balance).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver failed to converge or produced non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace falris
