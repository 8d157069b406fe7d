#pragma once

#include <cmath>
#include <functional>

#include "doctest.h"
#include "wcw/error.hpp"

namespace testutil {

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool throws_kind(const std::function<void()>& f, wcw::ErrorKind kind) {
  try {
    f();
  } catch (const wcw::Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace testutil
