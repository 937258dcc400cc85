#pragma once

#include <stdexcept>
#include <string>

namespace dlearn {

// Error categories map onto CLI exit codes: config -> 2, data -> 3,
// numeric -> 4.
enum class ErrorCategory { Config, Data, Numeric };

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category_(cat) {}
    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

class InvalidConfig : public Error {
  public:
    explicit InvalidConfig(const std::string& msg)
        : Error(ErrorCategory::Config, msg) {}
};

class InvalidMode : public Error {
  public:
    explicit InvalidMode(const std::string& msg)
        : Error(ErrorCategory::Config, msg) {}
};

class InvalidInput : public Error {
  public:
    explicit InvalidInput(const std::string& msg)
        : Error(ErrorCategory::Data, msg) {}
};

class MissingArm : public Error {
  public:
    explicit MissingArm(const std::string& msg)
        : Error(ErrorCategory::Data, msg) {}
};

class ParseError : public Error {
  public:
    ParseError(std::size_t row, std::size_t col, const std::string& msg)
        : Error(ErrorCategory::Data, "row " + std::to_string(row) + ", column " +
                                         std::to_string(col) + ": " + msg),
          row_(row), col_(col) {}
    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

  private:
    std::size_t row_;
    std::size_t col_;
};

class IOError : public Error {
  public:
    explicit IOError(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};

class SingularDesign : public Error {
  public:
    explicit SingularDesign(const std::string& msg)
        : Error(ErrorCategory::Numeric, msg) {}
};

class UndefinedValue : public Error {
  public:
    explicit UndefinedValue(const std::string& msg)
        : Error(ErrorCategory::Numeric, msg) {}
};

} // namespace dlearn
