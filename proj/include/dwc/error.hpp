#pragma once

#include <stdexcept>
#include <string>

namespace dwc {

enum class ErrorCode {
    RegimeMismatch,
    GridTooCoarse,
    DimensionMismatch,
    SolveFailure,
    AlphaOne,
    ZeroField,
    NonPositiveStep,
    WindowMismatch,
    NoConvergence,
    ZeroTarget,
    MethodTooLarge,
    TooFewSamples,
    InvalidArgument,
    ConfigParse,
    UnknownCommand,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::RegimeMismatch: return "RegimeMismatch";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SolveFailure: return "SolveFailure";
        case ErrorCode::AlphaOne: return "AlphaOne";
        case ErrorCode::ZeroField: return "ZeroField";
        case ErrorCode::NonPositiveStep: return "NonPositiveStep";
        case ErrorCode::WindowMismatch: return "WindowMismatch";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::ZeroTarget: return "ZeroTarget";
        case ErrorCode::MethodTooLarge: return "MethodTooLarge";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::UnknownCommand: return "UnknownCommand";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable code; what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace dwc
