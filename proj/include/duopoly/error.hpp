#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace duopoly {

enum class ErrorKind {
    InvalidParams,
    InvalidState,
    StepTooLarge,
    DegenerateLinearization,
    NoConvergence,
    NoBracket,
    InvalidConfig,
    IsolatedAgent,
    GridMismatch,
    ZeroVarianceTarget,
    ZeroAreaTarget,
    ConfigParse,
    UnknownFigure,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParams: return "invalid-params";
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::StepTooLarge: return "step-too-large";
    case ErrorKind::DegenerateLinearization: return "degenerate-linearization";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::NoBracket: return "no-bracket";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::IsolatedAgent: return "isolated-agent";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::ZeroVarianceTarget: return "zero-variance-target";
    case ErrorKind::ZeroAreaTarget: return "zero-area-target";
    case ErrorKind::ConfigParse: return "config-parse";
    case ErrorKind::UnknownFigure: return "unknown-figure";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace duopoly
