#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gftransfer {

enum class ErrorCode {
    InvalidArgument,
    AsymmetricWeights,
    NegativeWeight,
    NonzeroDiagonal,
    DuplicateNodeId,
    DecompositionFailure,
    DimensionMismatch,
    InvalidProbability,
    TooManyRemovals,
    NoRoomToAdd,
    ZeroSpectrum,
    SingularSystem,
    EmptySampleSet,
    PoleOnGrid,
    SolverDiverged,
    NonPositiveLambda,
    SingularCovariance,
    DegenerateWeights,
    MappingMismatch,
    AllTrialsFailed,
    IndexOutOfRange,
    ParseError,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::AsymmetricWeights: return "AsymmetricWeights";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
        case ErrorCode::DuplicateNodeId: return "DuplicateNodeId";
        case ErrorCode::DecompositionFailure: return "DecompositionFailure";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidProbability: return "InvalidProbability";
        case ErrorCode::TooManyRemovals: return "TooManyRemovals";
        case ErrorCode::NoRoomToAdd: return "NoRoomToAdd";
        case ErrorCode::ZeroSpectrum: return "ZeroSpectrum";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::EmptySampleSet: return "EmptySampleSet";
        case ErrorCode::PoleOnGrid: return "PoleOnGrid";
        case ErrorCode::SolverDiverged: return "SolverDiverged";
        case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::DegenerateWeights: return "DegenerateWeights";
        case ErrorCode::MappingMismatch: return "MappingMismatch";
        case ErrorCode::AllTrialsFailed: return "AllTrialsFailed";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI) can report it in a machine-readable way.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) throw Error(code, what);
}

}  // namespace gftransfer
