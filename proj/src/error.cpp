#include "simspec/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace simspec {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DisconnectedMesh: return "DisconnectedMesh";
    case ErrorCode::FrameSizeMismatch: return "FrameSizeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingFrame: return "MissingFrame";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ConnectivityMismatch: return "ConnectivityMismatch";
    case ErrorCode::RadiusTooSmall: return "RadiusTooSmall";
    case ErrorCode::EpsilonTooSmall: return "EpsilonTooSmall";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BasisMismatch: return "BasisMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

namespace {

std::mutex g_handler_mutex;

WarningHandler& handler_slot() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

} // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(g_handler_mutex);
    return std::exchange(handler_slot(), std::move(handler));
}

void warn(std::string_view message) {
    std::lock_guard lock(g_handler_mutex);
    if (handler_slot()) handler_slot()(message);
}

} // namespace simspec
