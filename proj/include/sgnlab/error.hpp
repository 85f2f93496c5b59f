#ifndef SGNLAB_ERROR_HPP
#define SGNLAB_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgnlab {

// Exit codes of the command-line tool, one per error family.
enum class ExitCode : int { success = 0, validation = 1, numerical = 2, io = 3 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual ExitCode exit_code() const noexcept = 0;
};

// Bad shapes, out-of-range settings, malformed user input.
class ValidationError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

// Divergence, NaN, or a quantity that is undefined for the given input.
class NumericalError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

class IoError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

// Malformed binary or text input; carries the byte offset of the failure.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ValidationError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace sgnlab

#endif  // SGNLAB_ERROR_HPP
