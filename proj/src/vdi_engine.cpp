#include "xrpipe/vdi_engine.hpp"

#include <algorithm>
#include <limits>

#include "xrpipe/error.hpp"

namespace xrpipe {

std::string_view to_string(InstanceState state) noexcept {
  switch (state) {
    case InstanceState::Configured: return "CONFIGURED";
    case InstanceState::Running: return "RUNNING";
    case InstanceState::Stopped: return "STOPPED";
  }
  return "UNKNOWN";
}

std::string format_decode_event(const DecodeEvent& event) {
  std::string line = "DECODE instance=" + std::to_string(to_underlying(event.instance)) +
                     " poc=" + std::to_string(event.poc) + " t=" + std::to_string(event.time) + " group=";
  line += event.group ? std::to_string(to_underlying(*event.group)) : "-";
  return line;
}

EngineEnvelope EngineEnvelope::from_samples_per_second(std::int64_t samples_per_second, std::uint32_t max_instances,
                                                       std::uint32_t max_width, std::uint32_t max_height,
                                                       std::uint32_t tick_rate) {
  EngineEnvelope e;
  e.max_instances = max_instances;
  e.max_samples_per_tick = Rational(samples_per_second, tick_rate);
  e.max_width = max_width;
  e.max_height = max_height;
  e.tick_rate = tick_rate;
  return e;
}

VideoDecodingEngine::VideoDecodingEngine(EngineEnvelope envelope) : envelope_(std::move(envelope)) {
  if (envelope_.tick_rate == 0) throw Error(ErrorCode::InvariantViolation, "engine tick_rate must be positive");
}

VideoDecodingEngine::Slot& VideoDecodingEngine::slot(InstanceId id) {
  auto it = instances_.find(id);
  if (it == instances_.end()) throw Error(ErrorCode::UnknownInstance, std::to_string(to_underlying(id)));
  return it->second;
}

const VideoDecodingEngine::Slot& VideoDecodingEngine::slot(InstanceId id) const {
  auto it = instances_.find(id);
  if (it == instances_.end()) throw Error(ErrorCode::UnknownInstance, std::to_string(to_underlying(id)));
  return it->second;
}

Rational VideoDecodingEngine::admitted_total() const {
  Rational total{0};
  for (const auto& [id, s] : instances_) total += s.info.admitted_rate;
  return total;
}

CapabilityReport VideoDecodingEngine::query_current_aggregate_capabilities(CodecProfile profile) const {
  if (std::find(envelope_.profiles.begin(), envelope_.profiles.end(), profile) == envelope_.profiles.end()) {
    throw Error(ErrorCode::UnknownCodecProfile, std::string(to_string(profile)));
  }
  CapabilityReport r;
  r.codec_profile = profile;
  r.max_instances = envelope_.max_instances;
  r.max_aggregate_samples_per_tick = envelope_.max_samples_per_tick;
  r.max_width = envelope_.max_width;
  r.max_height = envelope_.max_height;
  const auto active = static_cast<std::uint32_t>(instances_.size());
  r.available_instances = active >= envelope_.max_instances ? 0 : envelope_.max_instances - active;
  r.available_samples_per_tick = envelope_.max_samples_per_tick - admitted_total();
  return r;
}

InstanceId VideoDecodingEngine::get_instance(const InstanceRequirements& req, std::optional<GroupId> group) {
  const CapabilityReport cap = query_current_aggregate_capabilities(req.codec_profile);
  if (req.width == 0 || req.height == 0 || req.frame_rate <= 0) {
    throw Error(ErrorCode::InvariantViolation, "instance requirements must be positive");
  }
  if (req.width > envelope_.max_width || req.height > envelope_.max_height) {
    throw Error(ErrorCode::OversizedPicture, std::to_string(req.width) + "x" + std::to_string(req.height) +
                                                 " exceeds " + std::to_string(envelope_.max_width) + "x" +
                                                 std::to_string(envelope_.max_height));
  }
  if (group && !groups_.contains(*group)) {
    throw Error(ErrorCode::UnknownGroup, std::to_string(to_underlying(*group)));
  }
  const Rational rate = Rational(static_cast<std::int64_t>(req.width) * req.height) * req.frame_rate /
                        Rational(envelope_.tick_rate);
  if (cap.available_instances == 0) {
    throw Error(ErrorCode::InsufficientCapacity, "no decoder instance slot left");
  }
  if (rate > cap.available_samples_per_tick) {
    throw Error(ErrorCode::InsufficientCapacity, "luma sample budget exhausted");
  }

  const InstanceId id{next_instance_++};
  Slot s;
  s.info.id = id;
  s.info.requirements = req;
  s.info.admitted_rate = rate;
  s.info.group = group;
  instances_.emplace(id, std::move(s));
  if (group) groups_.at(*group).members.insert(id);
  return id;
}

void VideoDecodingEngine::set_config(InstanceId id, const OutputBufferProperties& properties) {
  Slot& s = slot(id);
  if (s.info.state == InstanceState::Running) {
    throw Error(ErrorCode::InvalidState, "cannot reconfigure a running instance");
  }
  if (properties.capacity_frames == 0) throw Error(ErrorCode::ZeroCapacity, "output buffer capacity is zero");
  s.buffer = std::make_unique<CircularBuffer>(properties.capacity_frames);
  s.info.output = properties;
  s.info.state = InstanceState::Configured;
  s.info.end_of_stream = false;
  s.stream.reset();
  s.pictures.clear();
  s.next_picture = 0;
}

std::optional<CropWindow> VideoDecodingEngine::get_parameter(InstanceId id, std::string_view key) const {
  const Slot& s = slot(id);
  if (key != kCropWindowParameter) throw Error(ErrorCode::UnknownParameter, std::string(key));
  return s.info.crop_window;
}

void VideoDecodingEngine::set_parameter(InstanceId id, std::string_view key, const CropWindow& value) {
  Slot& s = slot(id);
  if (key != kCropWindowParameter) throw Error(ErrorCode::UnknownParameter, std::string(key));
  if (!crop_fits(value, s.info.requirements.width, s.info.requirements.height)) {
    throw Error(ErrorCode::CropOutOfBounds, "crop window exceeds the decoded picture");
  }
  s.info.crop_window = value;
}

GroupId VideoDecodingEngine::create_group(std::uint32_t skew_tolerance_pocs) {
  const GroupId id{next_group_++};
  groups_.emplace(id, InstanceGroup{id, {}, skew_tolerance_pocs});
  return id;
}

void VideoDecodingEngine::submit_stream(InstanceId id, ToyStream stream) {
  Slot& s = slot(id);
  if (!s.buffer) throw Error(ErrorCode::NoOutputBuffer, "call set_config before submitting a stream");
  if (s.info.state != InstanceState::Configured) {
    throw Error(ErrorCode::InvalidState, "instance is not in CONFIGURED state");
  }
  if (stream.codec_profile != s.info.requirements.codec_profile) {
    throw Error(ErrorCode::ProfileMismatch, std::string(to_string(stream.codec_profile)) + " stream on a " +
                                                std::string(to_string(s.info.requirements.codec_profile)) +
                                                " instance");
  }
  validate_stream(stream);
  s.pictures = pictures_of(stream);
  s.geometry = grid_geometry(stream);
  s.stream = std::move(stream);
  s.next_picture = 0;
  s.info.end_of_stream = false;
  s.info.state = InstanceState::Running;
}

void VideoDecodingEngine::set_decode_rate(InstanceId id, std::uint32_t pictures_per_step) {
  if (pictures_per_step == 0) throw Error(ErrorCode::InvariantViolation, "decode rate must be positive");
  slot(id).info.pictures_per_step = pictures_per_step;
}

std::int64_t VideoDecodingEngine::reachable_poc(const Slot& s) const {
  std::int64_t reach = s.info.progress_poc;
  if (s.info.state != InstanceState::Running) return reach;
  const std::size_t end = std::min(s.pictures.size(), s.next_picture + s.info.pictures_per_step);
  for (std::size_t p = s.next_picture; p < end; ++p) reach = std::max<std::int64_t>(reach, s.pictures[p].poc);
  return reach;
}

std::vector<DecodeEvent> VideoDecodingEngine::step(Ticks duration) {
  // Ceilings are computed from the pre-step state so the outcome does not
  // depend on the order instances are visited in.
  std::map<GroupId, std::int64_t> ceiling;
  for (const auto& [gid, g] : groups_) {
    std::int64_t floor_reach = std::numeric_limits<std::int64_t>::max();
    for (InstanceId member : g.members) floor_reach = std::min(floor_reach, reachable_poc(instances_.at(member)));
    if (!g.members.empty()) ceiling[gid] = floor_reach + g.skew_tolerance_pocs;
  }

  clock_ += duration;
  std::vector<DecodeEvent> events;
  for (auto& [id, s] : instances_) {
    if (s.info.state != InstanceState::Running) continue;
    const std::size_t remaining = s.pictures.size() - s.next_picture;
    const std::size_t budget = std::min<std::size_t>(remaining, s.info.pictures_per_step);
    std::size_t decoded = 0;
    while (decoded < budget) {
      const PictureRef& picture = s.pictures[s.next_picture];
      if (s.info.group && static_cast<std::int64_t>(picture.poc) > ceiling.at(*s.info.group)) break;
      DecodedPicture out = decode_picture(*s.stream, picture, s.geometry, s.info.crop_window);
      out.pixel_format = s.info.output->pixel_format;
      const std::uint64_t frame_index = s.buffer->write_frame(encode_picture_frame(out), out.pts);
      s.info.progress_poc = std::max<std::int64_t>(s.info.progress_poc, picture.poc);
      ++s.info.pictures_decoded;
      ++s.next_picture;
      ++decoded;
      events.push_back({id, picture.poc, clock_, s.info.group, frame_index});
    }
    if (decoded < budget) ++s.info.stall_steps;
    if (s.next_picture == s.pictures.size()) {
      s.info.state = InstanceState::Stopped;
      s.info.end_of_stream = true;
    }
  }
  return events;
}

void VideoDecodingEngine::release_instance(InstanceId id) {
  Slot& s = slot(id);
  if (s.info.group) groups_.at(*s.info.group).members.erase(id);
  instances_.erase(id);
}

const DecoderInstance& VideoDecodingEngine::instance(InstanceId id) const { return slot(id).info; }

const InstanceGroup& VideoDecodingEngine::group(GroupId id) const {
  auto it = groups_.find(id);
  if (it == groups_.end()) throw Error(ErrorCode::UnknownGroup, std::to_string(to_underlying(id)));
  return it->second;
}

std::vector<InstanceId> VideoDecodingEngine::instance_ids() const {
  std::vector<InstanceId> ids;
  for (const auto& [id, s] : instances_) ids.push_back(id);
  return ids;
}

std::vector<GroupId> VideoDecodingEngine::group_ids() const {
  std::vector<GroupId> ids;
  for (const auto& [id, g] : groups_) ids.push_back(id);
  return ids;
}

CircularBuffer& VideoDecodingEngine::output_buffer(InstanceId id) {
  Slot& s = slot(id);
  if (!s.buffer) throw Error(ErrorCode::NoOutputBuffer, "instance has no output buffer");
  return *s.buffer;
}

const CircularBuffer& VideoDecodingEngine::output_buffer(InstanceId id) const {
  const Slot& s = slot(id);
  if (!s.buffer) throw Error(ErrorCode::NoOutputBuffer, "instance has no output buffer");
  return *s.buffer;
}

}  // namespace xrpipe
