#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agcfar {

enum class ErrorKind {
    NonFiniteValue,
    SeriesTooShort,
    DimensionMismatch,
    LengthMismatch,
    InvalidModel,
    InvalidConfig,
    DegenerateInput,
    OptimizerFailed,
    AllCellsFailed,
    AllRunsFailed,
    NegativePower,
    InvalidOnset,
    MissingDecay,
    Io,
    Parse,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::OptimizerFailed: return "OptimizerFailed";
    case ErrorKind::AllCellsFailed: return "AllCellsFailed";
    case ErrorKind::AllRunsFailed: return "AllRunsFailed";
    case ErrorKind::NegativePower: return "NegativePower";
    case ErrorKind::InvalidOnset: return "InvalidOnset";
    case ErrorKind::MissingDecay: return "MissingDecay";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
    }
    return "Unknown";
}

/// Single exception type for the library. `index()` is meaningful for
/// NonFiniteValue and NegativePower, where it names the offending sample.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::size_t index = 0)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), index_(index) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::size_t index() const noexcept { return index_; }

private:
    ErrorKind kind_;
    std::size_t index_;
};

} // namespace agcfar
