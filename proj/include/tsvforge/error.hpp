#pragma once

#include <stdexcept>
#include <string>

namespace tsvforge {

/// Broad failure classes. The CLI maps each to a distinct exit code.
enum class ErrorCategory {
  contract = 2,   // precondition violated by the caller
  dimension = 3,  // tensor/matrix shapes do not line up
  data = 4,       // malformed or inconsistent input data
  config = 5,     // invalid experiment or model configuration
  numeric = 6,    // singular system, non-finite values
  divergence = 7, // training produced a non-finite loss
  lookup = 8,     // requested entry was never fitted/stored
  io = 9,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

private:
  ErrorCategory category_;
};

#define TSVFORGE_DEFINE_ERROR(Name, Category)                                  \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorCategory::Category, what) {} \
  };

TSVFORGE_DEFINE_ERROR(ContractViolation, contract)
TSVFORGE_DEFINE_ERROR(DimensionError, dimension)
TSVFORGE_DEFINE_ERROR(DataError, data)
TSVFORGE_DEFINE_ERROR(ConfigError, config)
TSVFORGE_DEFINE_ERROR(NumericError, numeric)
TSVFORGE_DEFINE_ERROR(DivergenceError, divergence)
TSVFORGE_DEFINE_ERROR(LookupError, lookup)
TSVFORGE_DEFINE_ERROR(IoError, io)

#undef TSVFORGE_DEFINE_ERROR

} // namespace tsvforge
