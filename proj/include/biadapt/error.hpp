#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biadapt {

enum class ErrorKind {
    BadMagic,
    DimMismatch,
    LabelOutOfRange,
    MissingSidecar,
    BadSidecar,
    EmptySet,
    IoFailure,
    SizeMismatch,
    NotUpperTriangular,
    DuplicateClassInBatch,
    NonFiniteGradient,
    InsufficientSamples,
    InvalidConfig,
    ZeroVector,
    TooFewClasses,
    DegenerateSamples,
    BadGrid,
    InfeasibleSpec,
};

std::string_view error_name(ErrorKind kind) noexcept;

// All library failures surface as this exception; kind() carries the
// stable name the CLI prints on stderr.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail);

    ErrorKind kind() const noexcept { return m_kind; }
    std::string_view name() const noexcept { return error_name(m_kind); }

private:
    ErrorKind m_kind;
};

} // namespace biadapt
