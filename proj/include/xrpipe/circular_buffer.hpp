#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include "xrpipe/toy_stream.hpp"

namespace xrpipe {

struct Frame {
  std::uint64_t index = 0;  // sequence number, assigned on write
  Ticks timestamp = 0;
  Bytes data;

  std::size_t length() const noexcept { return data.size(); }
  bool operator==(const Frame&) const = default;
};

struct FrameIndex {
  std::uint64_t value = 0;
};

/// Resolves to the stored frame with the greatest timestamp <= value.
struct FrameTime {
  Ticks value = 0;
};

using FrameSelector = std::variant<FrameIndex, FrameTime>;

/// Bounded store of variable-length frames with independent read and write
/// pointers.
///
/// The writer never blocks on the reader: writing into a full buffer evicts
/// the oldest unread frame and moves the read pointer past it. Reads at the
/// read pointer consume; reads by index or timestamp do not. One producer and
/// one consumer may call concurrently. Critical sections only swap frame
/// handles, so a reader never sees a partially written frame and neither
/// side waits on the other's copy.
class CircularBuffer {
 public:
  explicit CircularBuffer(std::size_t capacity_frames);

  CircularBuffer(const CircularBuffer&) = delete;
  CircularBuffer& operator=(const CircularBuffer&) = delete;

  /// Returns the sequence index of the stored frame.
  std::uint64_t write_frame(Bytes data, Ticks timestamp);

  /// Throws Error(Empty) when nothing is stored.
  Frame read_frame();
  std::optional<Frame> try_read_frame();

  /// Throws Error(NotStored) for an evicted, consumed, or future index and
  /// Error(NoFrameAtOrBefore) when every stored frame is later than the
  /// requested timestamp.
  Frame read_frame_at(const FrameSelector& selector) const;

  std::size_t capacity() const noexcept { return slots_.size(); }
  std::size_t stored() const;
  std::size_t read_ptr() const;
  std::size_t write_ptr() const;
  std::uint64_t writes() const;
  std::uint64_t evictions() const;
  std::uint64_t consumed() const;

 private:
  using FramePtr = std::shared_ptr<const Frame>;

  mutable std::mutex mutex_;
  std::vector<FramePtr> slots_;
  std::size_t read_ptr_ = 0;
  std::size_t write_ptr_ = 0;
  std::size_t stored_ = 0;
  std::uint64_t next_index_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t consumed_ = 0;
};

}  // namespace xrpipe
