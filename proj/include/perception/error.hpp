#pragma once

#include <stdexcept>
#include <string>

namespace perception {

// Every failure surfaced by the library derives from Error. The CLI maps the
// concrete type onto a process exit code (see exit_code()).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad JSON line, missing file, unreadable config.
class InputError : public Error {
  public:
    using Error::Error;
};

class ParseError : public InputError {
  public:
    ParseError(const std::string &source, std::size_t line, const std::string &what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// A value violates a documented precondition or invariant.
class ValidationError : public InputError {
  public:
    using InputError::InputError;
};

// Checkpoint and config disagree (feature hash, shapes, format version).
class CompatibilityError : public Error {
  public:
    using Error::Error;
};

class NumericError : public Error {
  public:
    using Error::Error;
};

class TrainingError : public NumericError {
  public:
    TrainingError(std::size_t epoch, std::size_t batch, const std::string &what)
        : NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                       std::to_string(batch) + ": " + what),
          epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const { return epoch_; }
    std::size_t batch() const { return batch_; }

  private:
    std::size_t epoch_;
    std::size_t batch_;
};

// 0 success, 2 input error, 3 compatibility error, 4 numeric/training error.
inline int exit_code(const Error &e) {
    if (dynamic_cast<const CompatibilityError *>(&e)) return 3;
    if (dynamic_cast<const NumericError *>(&e)) return 4;
    return 2;
}

} // namespace perception
