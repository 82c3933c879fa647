#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xrpipe {

enum class ErrorCode {
  // toy_stream
  BadMagic,
  TruncatedInput,
  InvariantViolation,
  // vdi_engine
  UnknownCodecProfile,
  InsufficientCapacity,
  UnknownGroup,
  UnknownInstance,
  OversizedPicture,
  InvalidState,
  ZeroCapacity,
  UnknownParameter,
  CropOutOfBounds,
  NoOutputBuffer,
  ProfileMismatch,
  // input_formatting
  EmptyResult,
  UnknownTile,
  DtsOrderViolation,
  PositionOutOfRange,
  ParameterMismatch,
  EmptyInput,
  FrameStructureMismatch,
  LayoutArityMismatch,
  // circular_buffer
  Empty,
  NotStored,
  NoFrameAtOrBefore,
  // scene_description
  MalformedDocument,
  DanglingReference,
  CycleDetected,
  TimedWithoutCircular,
  VideoTextureNotTimed,
  InvalidAudioWiring,
  ListenerHasOutput,
  InvalidCircularBuffer,
  BufferViewOutOfRange,
  MultiParentNode,
  // scene_updates
  TransactionFailed,
  DanglingAfterRemove,
  // maf_pipeline
  AdmissionFailed,
  MissingMedia,
  InvalidScenario,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every recoverable failure raised by the library. The
/// code is stable and is what tests and reports key on; the message is for
/// humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace xrpipe
