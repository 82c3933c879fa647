#include "xrpipe/error.hpp"

namespace xrpipe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedInput: return "TruncatedInput";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::UnknownCodecProfile: return "UnknownCodecProfile";
    case ErrorCode::InsufficientCapacity: return "InsufficientCapacity";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::OversizedPicture: return "OversizedPicture";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::ZeroCapacity: return "ZeroCapacity";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::CropOutOfBounds: return "CropOutOfBounds";
    case ErrorCode::NoOutputBuffer: return "NoOutputBuffer";
    case ErrorCode::ProfileMismatch: return "ProfileMismatch";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::UnknownTile: return "UnknownTile";
    case ErrorCode::DtsOrderViolation: return "DtsOrderViolation";
    case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::ParameterMismatch: return "ParameterMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::FrameStructureMismatch: return "FrameStructureMismatch";
    case ErrorCode::LayoutArityMismatch: return "LayoutArityMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::NotStored: return "NotStored";
    case ErrorCode::NoFrameAtOrBefore: return "NoFrameAtOrBefore";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::TimedWithoutCircular: return "TimedWithoutCircular";
    case ErrorCode::VideoTextureNotTimed: return "VideoTextureNotTimed";
    case ErrorCode::InvalidAudioWiring: return "InvalidAudioWiring";
    case ErrorCode::ListenerHasOutput: return "ListenerHasOutput";
    case ErrorCode::InvalidCircularBuffer: return "InvalidCircularBuffer";
    case ErrorCode::BufferViewOutOfRange: return "BufferViewOutOfRange";
    case ErrorCode::MultiParentNode: return "MultiParentNode";
    case ErrorCode::TransactionFailed: return "TransactionFailed";
    case ErrorCode::DanglingAfterRemove: return "DanglingAfterRemove";
    case ErrorCode::AdmissionFailed: return "AdmissionFailed";
    case ErrorCode::MissingMedia: return "MissingMedia";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
  }
  return "Unknown";
}

}  // namespace xrpipe
