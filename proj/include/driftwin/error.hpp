#pragma once

#include <stdexcept>
#include <string>

namespace driftwin {

enum class ErrorCode {
    EmptyInput,
    DegenerateWindow,
    TooLarge,
    NullWindowMass,
    ConstantWDS,
    UnchainableAtom,
    DimensionMismatch,
    UncoveredAtom,
    NonFiniteObjective,
    InsufficientReadings,
    InvalidInput,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace driftwin
