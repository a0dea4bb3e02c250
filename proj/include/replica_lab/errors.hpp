#pragma once

#include <stdexcept>
#include <string>

namespace replica_lab {

// Thrown when a requested computation exceeds a deliberate resource guard
// (state-space size, term count, search budget). The CLI maps this to its
// own exit code so batch scripts can skip oversized runs.
class CapacityError : public std::runtime_error {
public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Text-format parse failure carrying a 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

}  // namespace replica_lab
