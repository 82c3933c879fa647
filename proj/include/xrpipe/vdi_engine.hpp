#pragma once

// Video Decoding Engine: capability accounting, decoder instance lifecycle,
// time-locked instance groups, dynamic parameters, and simulated decoding
// of toy streams into circular output buffers.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xrpipe/circular_buffer.hpp"
#include "xrpipe/toy_decoder.hpp"
#include "xrpipe/toy_stream.hpp"

namespace xrpipe {

enum class InstanceId : std::uint32_t {};
enum class GroupId : std::uint32_t {};

constexpr std::uint32_t to_underlying(InstanceId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t to_underlying(GroupId id) noexcept { return static_cast<std::uint32_t>(id); }

/// Static capability envelope of the platform. Luma sample budgets are
/// exact rationals in samples per tick.
struct EngineEnvelope {
  std::vector<CodecProfile> profiles{CodecProfile::ToyBase, CodecProfile::ToyTiled};
  std::uint32_t max_instances = 2;
  Rational max_samples_per_tick{0};
  std::uint32_t max_width = 0;
  std::uint32_t max_height = 0;
  std::uint32_t tick_rate = 90000;

  /// Convenience: budget given as luma samples per second.
  static EngineEnvelope from_samples_per_second(std::int64_t samples_per_second, std::uint32_t max_instances,
                                                std::uint32_t max_width, std::uint32_t max_height,
                                                std::uint32_t tick_rate = 90000);
};

struct CapabilityReport {
  CodecProfile codec_profile = CodecProfile::ToyBase;
  std::uint32_t max_instances = 0;
  Rational max_aggregate_samples_per_tick{0};
  std::uint32_t max_width = 0;
  std::uint32_t max_height = 0;
  std::uint32_t available_instances = 0;
  Rational available_samples_per_tick{0};

  bool operator==(const CapabilityReport&) const = default;
};

struct InstanceRequirements {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  Rational frame_rate{30};
  CodecProfile codec_profile = CodecProfile::ToyBase;
};

struct OutputBufferProperties {
  std::size_t capacity_frames = 1;
  std::uint32_t pixel_format = kPixelFormatGray8;
};

enum class InstanceState { Configured, Running, Stopped };
std::string_view to_string(InstanceState state) noexcept;

inline constexpr std::string_view kCropWindowParameter = "crop_window";

struct DecoderInstance {
  InstanceId id{};
  InstanceRequirements requirements;
  Rational admitted_rate{0};  // luma samples per tick
  InstanceState state = InstanceState::Configured;
  std::int64_t progress_poc = -1;
  std::optional<GroupId> group;
  std::optional<CropWindow> crop_window;
  std::optional<OutputBufferProperties> output;
  std::uint32_t pictures_per_step = 1;
  std::uint64_t pictures_decoded = 0;
  std::uint64_t stall_steps = 0;
  bool end_of_stream = false;
};

struct InstanceGroup {
  GroupId id{};
  std::set<InstanceId> members;
  std::uint32_t skew_tolerance_pocs = 0;
};

struct DecodeEvent {
  InstanceId instance{};
  std::uint32_t poc = 0;
  Ticks time = 0;
  std::optional<GroupId> group;
  std::uint64_t frame_index = 0;  // index in the instance's output buffer

  bool operator==(const DecodeEvent&) const = default;
};

/// `DECODE instance=<id> poc=<p> t=<ticks> group=<g|->`
std::string format_decode_event(const DecodeEvent& event);

/// Single logical owner of all instance state; callers on several threads
/// must serialize their calls. Output buffers are the only state meant to be
/// touched concurrently (one producer: this engine, one consumer).
class VideoDecodingEngine {
 public:
  explicit VideoDecodingEngine(EngineEnvelope envelope);

  const EngineEnvelope& envelope() const noexcept { return envelope_; }

  CapabilityReport query_current_aggregate_capabilities(CodecProfile profile) const;

  /// Throws UnknownCodecProfile, OversizedPicture, UnknownGroup, or
  /// InsufficientCapacity; nothing is admitted on failure.
  InstanceId get_instance(const InstanceRequirements& requirements, std::optional<GroupId> group = std::nullopt);

  /// Binds the instance to a fresh circular buffer. Allowed in CONFIGURED or
  /// STOPPED; any previously submitted stream is dropped.
  void set_config(InstanceId id, const OutputBufferProperties& properties);

  std::optional<CropWindow> get_parameter(InstanceId id, std::string_view key) const;
  /// Affects pictures decoded after the call only.
  void set_parameter(InstanceId id, std::string_view key, const CropWindow& value);

  GroupId create_group(std::uint32_t skew_tolerance_pocs);

  void submit_stream(InstanceId id, ToyStream stream);

  /// Simulated decode speed of an instance, in pictures per step.
  void set_decode_rate(InstanceId id, std::uint32_t pictures_per_step);

  /// Advances the engine clock by `duration`. Every running instance decodes
  /// up to its rate; members of a group never pass the group ceiling
  /// (min over members of their reachable progress_poc) + tolerance.
  std::vector<DecodeEvent> step(Ticks duration);

  /// Tears the instance down and returns its capacity to the pool.
  void release_instance(InstanceId id);

  const DecoderInstance& instance(InstanceId id) const;
  const InstanceGroup& group(GroupId id) const;
  std::vector<InstanceId> instance_ids() const;
  std::vector<GroupId> group_ids() const;
  CircularBuffer& output_buffer(InstanceId id);
  const CircularBuffer& output_buffer(InstanceId id) const;

  Rational admitted_total() const;
  Ticks now() const noexcept { return clock_; }

 private:
  struct Slot {
    DecoderInstance info;
    std::unique_ptr<CircularBuffer> buffer;
    std::optional<ToyStream> stream;
    std::vector<PictureRef> pictures;
    GridGeometry geometry;
    std::size_t next_picture = 0;
  };

  Slot& slot(InstanceId id);
  const Slot& slot(InstanceId id) const;
  std::int64_t reachable_poc(const Slot& s) const;

  EngineEnvelope envelope_;
  std::map<InstanceId, Slot> instances_;
  std::map<GroupId, InstanceGroup> groups_;
  std::uint32_t next_instance_ = 0;
  std::uint32_t next_group_ = 0;
  Ticks clock_ = 0;
};

}  // namespace xrpipe
