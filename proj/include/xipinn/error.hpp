#pragma once

#include <stdexcept>
#include <string>

namespace xipinn {

/// Non-finite values, failed factorizations, diverging iterations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A derivative of |phi| or sign(phi) was requested exactly on the interface.
class InterfacePointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace xipinn
