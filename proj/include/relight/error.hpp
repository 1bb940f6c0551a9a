#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relight {

enum class ErrorKind {
    // I/O
    FileNotFound,
    UnsupportedFormat,
    CorruptData,
    Unwritable,
    // Contract violations
    InvalidArgument,
    DimensionMismatch,
    EmptyInput,
    NonFinite,
    InsufficientIds,
    EmptyMask,
    DegenerateSize,
    // Instruction validation
    EmptyInstruction,
    MultiSentence,
    Overlong,
    Unterminated,
    // Sidecars
    MalformedRow,
    UnknownId,
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::FileNotFound: return "file_not_found";
    case ErrorKind::UnsupportedFormat: return "unsupported_format";
    case ErrorKind::CorruptData: return "corrupt_data";
    case ErrorKind::Unwritable: return "unwritable";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::EmptyInput: return "empty_input";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::InsufficientIds: return "insufficient_ids";
    case ErrorKind::EmptyMask: return "empty_mask";
    case ErrorKind::DegenerateSize: return "degenerate_size";
    case ErrorKind::EmptyInstruction: return "empty_instruction";
    case ErrorKind::MultiSentence: return "multi_sentence";
    case ErrorKind::Overlong: return "overlong";
    case ErrorKind::Unterminated: return "unterminated";
    case ErrorKind::MalformedRow: return "malformed_row";
    case ErrorKind::UnknownId: return "unknown_id";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers can branch
/// on the variant without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace relight
