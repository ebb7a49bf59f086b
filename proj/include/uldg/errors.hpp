#pragma once

#include <stdexcept>
#include <string>

namespace uldg {

enum class ErrorKind {
    Degenerate,
    ImproperCut,
    InconsistentTopology,
    DomainError,
    MergeFailure,
    DegenerateRegion,
    NonpositiveWeight,
    SingularMass,
    SingularMatrix,
    ResidualTooLarge,
    InsufficientPoints,
    Config,
};

const char* to_string(ErrorKind kind);

/// Library error. The message carries the element or face identifier when
/// one is relevant so failures in a long pipeline can be traced back.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::ImproperCut: return "ImproperCut";
    case ErrorKind::InconsistentTopology: return "InconsistentTopology";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::MergeFailure: return "MergeFailure";
    case ErrorKind::DegenerateRegion: return "DegenerateRegion";
    case ErrorKind::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorKind::SingularMass: return "SingularMass";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

} // namespace uldg
