#include "bnn/error.hpp"

namespace bnn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonBinaryValue: return "NonBinaryValue";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OddSpatialDim: return "OddSpatialDim";
    case ErrorCode::ConfigNotApplicable: return "ConfigNotApplicable";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::IncompleteTable: return "IncompleteTable";
    case ErrorCode::ModelHashMismatch: return "ModelHashMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
  }
  return "Unknown";
}

}  // namespace bnn
