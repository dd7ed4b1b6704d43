#pragma once

#include <stdexcept>
#include <string>

namespace hsi {

// Every failure raised by the library derives from Error. The CLI maps the
// category onto its exit code.
enum class ErrorKind {
  config,     // bad parameter or configuration value
  data,       // malformed data, file format, I/O
  numeric,    // non-finite values, solver failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::data, "shape error: " + w) {}
};
struct ParamError : Error {
  explicit ParamError(const std::string& w) : Error(ErrorKind::config, "parameter error: " + w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, "data error: " + w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::data, "format error: " + w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::data, "I/O error: " + w) {}
};
struct StructureError : Error {
  explicit StructureError(const std::string& w) : Error(ErrorKind::config, "structure error: " + w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, "numeric error: " + w) {}
};

}  // namespace hsi
