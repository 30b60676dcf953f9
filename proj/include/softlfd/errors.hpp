#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace softlfd {

/// Base class for every error raised by the library. `kind()` is the
/// error type name; `what()` is "<kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(kind + ": " + detail), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SOFTLFD_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& detail) : Error(#Name, detail) {} \
  }

SOFTLFD_DEFINE_ERROR(ParseError);
SOFTLFD_DEFINE_ERROR(ValidationError);
SOFTLFD_DEFINE_ERROR(IoError);
SOFTLFD_DEFINE_ERROR(CountMismatch);
SOFTLFD_DEFINE_ERROR(DegenerateSystem);
SOFTLFD_DEFINE_ERROR(InvalidScenario);
SOFTLFD_DEFINE_ERROR(UnknownScenario);
SOFTLFD_DEFINE_ERROR(ConfigError);

#undef SOFTLFD_DEFINE_ERROR

/// Raised when a Jacobian is (numerically) singular, which means the
/// deformation map folds space at that point.
class SingularJacobian : public Error {
 public:
  explicit SingularJacobian(const std::string& detail,
                            std::optional<std::size_t> sample = std::nullopt)
      : Error("SingularJacobian", detail), sample_(sample) {}

  std::optional<std::size_t> sample_index() const noexcept { return sample_; }

 private:
  std::optional<std::size_t> sample_;
};

}  // namespace softlfd
