#pragma once

#include <stdexcept>
#include <string>

namespace da {

/// Coarse error category. The values line up with the da_status codes of the
/// C API and with the CLI exit-code contract (usage=1, data=2, numeric=3).
enum class ErrorCode {
  InvalidArgument = 1,
  Data = 2,
  Numeric = 3,
  Io = 4,
  Internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgumentError : Error {
  explicit InvalidArgumentError(const std::string& m)
      : Error(ErrorCode::InvalidArgument, m) {}
};

/// Malformed input files, bad values, protocol violations.
struct DataError : Error {
  explicit DataError(const std::string& m) : Error(ErrorCode::Data, m) {}
};

/// Numerical failure at runtime (divergence, non-finite results).
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(ErrorCode::Numeric, m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorCode::Io, m) {}
};

}  // namespace da
