#include "xrpipe/circular_buffer.hpp"

#include <string>

#include "xrpipe/error.hpp"

namespace xrpipe {

CircularBuffer::CircularBuffer(std::size_t capacity_frames) {
  if (capacity_frames == 0) throw Error(ErrorCode::ZeroCapacity, "circular buffer needs at least one frame");
  slots_.resize(capacity_frames);
}

std::uint64_t CircularBuffer::write_frame(Bytes data, Ticks timestamp) {
  auto frame = std::make_shared<Frame>();
  frame->timestamp = timestamp;
  frame->data = std::move(data);

  FramePtr previous;  // released outside the lock
  std::uint64_t index = 0;
  {
    std::lock_guard lock(mutex_);
    index = next_index_++;
    frame->index = index;
    previous = std::move(slots_[write_ptr_]);
    slots_[write_ptr_] = std::move(frame);
    write_ptr_ = (write_ptr_ + 1) % slots_.size();
    if (stored_ == slots_.size()) {
      read_ptr_ = (read_ptr_ + 1) % slots_.size();
      ++evictions_;
    } else {
      ++stored_;
    }
  }
  return index;
}

std::optional<Frame> CircularBuffer::try_read_frame() {
  FramePtr frame;
  {
    std::lock_guard lock(mutex_);
    if (stored_ == 0) return std::nullopt;
    frame = slots_[read_ptr_];
    read_ptr_ = (read_ptr_ + 1) % slots_.size();
    --stored_;
    ++consumed_;
  }
  return *frame;
}

Frame CircularBuffer::read_frame() {
  auto frame = try_read_frame();
  if (!frame) throw Error(ErrorCode::Empty, "no stored frame to read");
  return std::move(*frame);
}

Frame CircularBuffer::read_frame_at(const FrameSelector& selector) const {
  FramePtr found;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < stored_; ++i) {
      const FramePtr& slot = slots_[(read_ptr_ + i) % slots_.size()];
      if (const auto* by_index = std::get_if<FrameIndex>(&selector)) {
        if (slot->index == by_index->value) {
          found = slot;
          break;
        }
      } else {
        const Ticks wanted = std::get<FrameTime>(selector).value;
        // Ties go to the later write.
        if (slot->timestamp <= wanted && (!found || slot->timestamp >= found->timestamp)) found = slot;
      }
    }
  }
  if (found) return *found;
  if (const auto* by_index = std::get_if<FrameIndex>(&selector)) {
    throw Error(ErrorCode::NotStored, "frame " + std::to_string(by_index->value) + " is not stored");
  }
  throw Error(ErrorCode::NoFrameAtOrBefore,
              "no stored frame at or before t=" + std::to_string(std::get<FrameTime>(selector).value));
}

std::size_t CircularBuffer::stored() const {
  std::lock_guard lock(mutex_);
  return stored_;
}

std::size_t CircularBuffer::read_ptr() const {
  std::lock_guard lock(mutex_);
  return read_ptr_;
}

std::size_t CircularBuffer::write_ptr() const {
  std::lock_guard lock(mutex_);
  return write_ptr_;
}

std::uint64_t CircularBuffer::writes() const {
  std::lock_guard lock(mutex_);
  return next_index_;
}

std::uint64_t CircularBuffer::evictions() const {
  std::lock_guard lock(mutex_);
  return evictions_;
}

std::uint64_t CircularBuffer::consumed() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

}  // namespace xrpipe
