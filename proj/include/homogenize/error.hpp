#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace homog {

/// Failure categories raised by the numerical modules. The CLI maps every
/// one of them to exit code 1.
enum class ErrorKind {
    InvalidArgument,
    Domain,
    ValidationFailed,
    NonStabilizing,
    FactorizationFailure,
    StepTooCoarse,
    NonFinite,
    ContractionViolated,
    RankDeficientBasis,
    CflViolation,
    OscillationUnresolved,
    RegionExceedsGrid,
    ExcessiveBoxExit,
    Io,
    Config,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace homog
