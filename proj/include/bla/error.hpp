#pragma once

#include <stdexcept>
#include <string>

namespace bla {

/// Error classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kParse,      // malformed input file
  kSchema,     // data/checkpoint shape incompatibility
  kContract,   // violated precondition
  kDimension,  // tensor shape mismatch
  kConfig,     // invalid configuration
  kRange,      // value outside its admissible range
  kMetric,     // metric undefined for the given input
  kIo,         // filesystem failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Process exit code: parse=2, schema=3, contract-like=4, I/O=5.
  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::kParse:
        return 2;
      case ErrorKind::kSchema:
        return 3;
      case ErrorKind::kIo:
        return 5;
      default:
        return 4;
    }
  }

 private:
  ErrorKind kind_;
};

#define BLA_DEFINE_ERROR(Name, Kind) \
  class Name : public Error {        \
   public:                           \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

BLA_DEFINE_ERROR(ParseError, kParse)
BLA_DEFINE_ERROR(SchemaError, kSchema)
BLA_DEFINE_ERROR(ContractError, kContract)
BLA_DEFINE_ERROR(DimensionError, kDimension)
BLA_DEFINE_ERROR(ConfigError, kConfig)
BLA_DEFINE_ERROR(RangeError, kRange)
BLA_DEFINE_ERROR(MetricError, kMetric)
BLA_DEFINE_ERROR(IoError, kIo)

#undef BLA_DEFINE_ERROR

}  // namespace bla
