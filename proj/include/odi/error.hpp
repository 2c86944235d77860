#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odi {

enum class ErrorKind {
    MalformedRow,
    InconsistentOutcome,
    DuplicateMatchId,
    EmptyVenue,
    UnknownVenue,
    InvalidParams,
    InsufficientSample,
    UnderdispersedSample,
    ZeroVariance,
    TargetUnattainable,
    InconsistentSpec,
    InvalidConfig,
    Io,
};

constexpr std::string_view to_string(ErrorKind k) noexcept {
    switch (k) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::InconsistentOutcome: return "InconsistentOutcome";
    case ErrorKind::DuplicateMatchId: return "DuplicateMatchId";
    case ErrorKind::EmptyVenue: return "EmptyVenue";
    case ErrorKind::UnknownVenue: return "UnknownVenue";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InsufficientSample: return "InsufficientSample";
    case ErrorKind::UnderdispersedSample: return "UnderdispersedSample";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TargetUnattainable: return "TargetUnattainable";
    case ErrorKind::InconsistentSpec: return "InconsistentSpec";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Every library failure carries a kind so callers (and the CLI exit-code
/// mapping) can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace odi
