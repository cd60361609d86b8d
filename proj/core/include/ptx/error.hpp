#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptx {

enum class ErrorCode {
    // imaging
    MalformedHeader,
    TruncatedData,
    UnsupportedMaxval,
    OutOfBounds,
    InvalidArgument,
    // segpost / patches
    EmptyMap,
    DegenerateLung,
    // backends
    BackendUnavailable,
    ProtocolError,
    ModelUnknown,
    MissingOracle,
    // pipeline
    MissingMember,
    ImageLoadError,
    // triage / store
    IncompleteResult,
    NotFlagged,
    UnknownStudy,
    ValidationError,
    FileUnreadable,
    // eval
    DegenerateLabels,
    Misaligned,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. All library failures are
/// reported through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace ptx
