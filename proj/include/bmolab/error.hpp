#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmolab {

enum class ErrorCode {
    LoadError,
    EmptyGenerator,
    InvalidExponent,
    UnknownGenerator,
    EmptyTarget,
    EmptySet,
    InvalidPartition,
    NonpositiveWeight,
    ZeroSeminorm,
    AlphaTooLarge,
    AlphaTooSmall,
    JnNotVerified,
    NoMaximalPick,
    NotNormalized,
    MissingDouble,
    InvalidParams,
    SizeLimit,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::LoadError: return "LoadError";
    case ErrorCode::EmptyGenerator: return "EmptyGenerator";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::UnknownGenerator: return "UnknownGenerator";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::ZeroSeminorm: return "ZeroSeminorm";
    case ErrorCode::AlphaTooLarge: return "AlphaTooLarge";
    case ErrorCode::AlphaTooSmall: return "AlphaTooSmall";
    case ErrorCode::JnNotVerified: return "JnNotVerified";
    case ErrorCode::NoMaximalPick: return "NoMaximalPick";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::MissingDouble: return "MissingDouble";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::SizeLimit: return "SizeLimit";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace bmolab
