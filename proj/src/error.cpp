#include "biadapt/error.hpp"

namespace biadapt {

std::string_view error_name(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::MissingSidecar: return "MissingSidecar";
    case ErrorKind::BadSidecar: return "BadSidecar";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::NotUpperTriangular: return "NotUpperTriangular";
    case ErrorKind::DuplicateClassInBatch: return "DuplicateClassInBatch";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::DegenerateSamples: return "DegenerateSamples";
    case ErrorKind::BadGrid: return "BadGrid";
    case ErrorKind::InfeasibleSpec: return "InfeasibleSpec";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(error_name(kind)) + ": " + detail), m_kind(kind) {}

} // namespace biadapt
