#include "te/error.hpp"

namespace te {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::DuplicatePoint: return "DuplicatePoint";
        case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
        case ErrorKind::InvalidConstant: return "InvalidConstant";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::TooManyDirections: return "TooManyDirections";
        case ErrorKind::GridTooFine: return "GridTooFine";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Format: return "Format";
    }
    return "Unknown";
}

}  // namespace te
