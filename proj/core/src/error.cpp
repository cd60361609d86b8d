#include "ptx/error.hpp"

namespace ptx {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedData: return "TruncatedData";
        case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyMap: return "EmptyMap";
        case ErrorCode::DegenerateLung: return "DegenerateLung";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::ModelUnknown: return "ModelUnknown";
        case ErrorCode::MissingOracle: return "MissingOracle";
        case ErrorCode::MissingMember: return "MissingMember";
        case ErrorCode::ImageLoadError: return "ImageLoadError";
        case ErrorCode::IncompleteResult: return "IncompleteResult";
        case ErrorCode::NotFlagged: return "NotFlagged";
        case ErrorCode::UnknownStudy: return "UnknownStudy";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::FileUnreadable: return "FileUnreadable";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::Misaligned: return "Misaligned";
    }
    return "Unknown";
}

}  // namespace ptx
