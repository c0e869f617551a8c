#include "orsnn/error.hpp"

namespace orsnn {

std::string_view kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NotBinary: return "NotBinary";
        case ErrorKind::NaNDetected: return "NaNDetected";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::BadMagic: return "BadMagic";
        case ErrorKind::Truncated: return "Truncated";
        case ErrorKind::CountMismatch: return "CountMismatch";
        case ErrorKind::DatasetNotFound: return "DatasetNotFound";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::ArchMismatch: return "ArchMismatch";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::CorruptPayload: return "CorruptPayload";
        case ErrorKind::UnknownLayer: return "UnknownLayer";
        case ErrorKind::VerificationFailed: return "VerificationFailed";
        case ErrorKind::Divergence: return "Divergence";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace orsnn
