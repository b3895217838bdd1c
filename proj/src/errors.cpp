#include "ksync/errors.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace ksync {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
        case ErrorKind::InvalidGraph: return "InvalidGraph";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidRange: return "InvalidRange";
        case ErrorKind::NotInCutsetSpace: return "NotInCutsetSpace";
        case ErrorKind::OverflowGuard: return "OverflowGuard";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::LeftDomain: return "LeftDomain";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::DisconnectedCase: return "DisconnectedCase";
        case ErrorKind::NonPositiveReactance: return "NonPositiveReactance";
        case ErrorKind::OracleFailed: return "OracleFailed";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {

std::mutex g_warning_mutex;

WarningHandler& handler_slot() {
    static WarningHandler handler = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(g_warning_mutex);
    return std::exchange(handler_slot(), std::move(handler));
}

void warn(std::string_view message) {
    std::lock_guard lock(g_warning_mutex);
    if (handler_slot()) handler_slot()(message);
}

}  // namespace ksync
