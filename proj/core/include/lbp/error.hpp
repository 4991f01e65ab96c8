#pragma once

#include <stdexcept>
#include <string>

namespace lbp {

// Malformed model text or expression. `position` is a 0-based offset into the
// text that was being parsed, or npos when no single position applies.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position = npos)
      : std::runtime_error(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t position_;
};

// A model evaluated outside its admissible range (b <= 0, c < c_min, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Solver, series or integrator failed to reach the requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lbp
