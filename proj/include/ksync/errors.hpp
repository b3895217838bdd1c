#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ksync {

enum class ErrorKind {
    DisconnectedGraph,
    NonPositiveWeight,
    InvalidGraph,
    DimensionMismatch,
    InvalidRange,
    NotInCutsetSpace,
    OverflowGuard,
    DomainError,
    NoConvergence,
    LeftDomain,
    RankDeficient,
    ParseError,
    DisconnectedCase,
    NonPositiveReactance,
    OracleFailed,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Installs the sink for non-fatal diagnostics and returns the previous one.
/// The default handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace ksync
