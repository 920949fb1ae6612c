#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simspec {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    DisconnectedMesh,
    FrameSizeMismatch,
    NonFiniteValue,
    MissingFrame,
    IndexOutOfRange,
    ConnectivityMismatch,
    RadiusTooSmall,
    EpsilonTooSmall,
    ConvergenceFailure,
    LengthMismatch,
    BasisMismatch,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// All library failures are reported through this type; `code()` lets callers
/// (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink (default: standard error). Returns the
/// previous handler so tests can restore it.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

} // namespace simspec
