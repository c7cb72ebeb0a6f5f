#pragma once

#include <stdexcept>
#include <string>

namespace bbcal {

// All recoverable failures (empty sets, unbounded programs, solver caps)
// surface as bbcal::Error with the message naming the condition.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bbcal
