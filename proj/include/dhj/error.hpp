#pragma once

#include <stdexcept>
#include <string>

namespace dhj {

/// Error categories shared by the C++ API and the C status codes.
enum class ErrorCode {
    InvalidArgument = 1,
    Config,
    Io,
    MaximizerOnBoundary,
    ConvexityViolation,
    GridMismatch,
    UnboundedBelow,
    UnboundedAbove,
    NotConverged,
    RegularityFailure,
    GradientBlowup,
    EmptyAubry,
    EmptyRegion,
    Escape,
    HypothesisViolation,
    FloorDominates,
};

const char *error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

#define DHJ_DEFINE_ERROR(Name)                                                                     \
    class Name : public Error {                                                                    \
      public:                                                                                      \
        explicit Name(const std::string &what) : Error(ErrorCode::Name, what) {}                   \
    };

DHJ_DEFINE_ERROR(InvalidArgument)
DHJ_DEFINE_ERROR(MaximizerOnBoundary)
DHJ_DEFINE_ERROR(GridMismatch)
DHJ_DEFINE_ERROR(UnboundedBelow)
DHJ_DEFINE_ERROR(UnboundedAbove)
DHJ_DEFINE_ERROR(RegularityFailure)
DHJ_DEFINE_ERROR(GradientBlowup)
DHJ_DEFINE_ERROR(EmptyAubry)
DHJ_DEFINE_ERROR(EmptyRegion)
DHJ_DEFINE_ERROR(Escape)
DHJ_DEFINE_ERROR(HypothesisViolation)
DHJ_DEFINE_ERROR(FloorDominates)

#undef DHJ_DEFINE_ERROR

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string &what) : Error(ErrorCode::Config, what) {}
};

class IoError : public Error {
  public:
    explicit IoError(const std::string &what) : Error(ErrorCode::Io, what) {}
};

} // namespace dhj
