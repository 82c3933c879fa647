#pragma once

// In-memory model of the supported glTF subset plus the MPEG extensions the
// pipeline consumes. Indices are kept as signed 64-bit integers so that an
// out-of-range or negative reference survives parsing and is reported by
// validate_scene with its document path.
//
// Fields the model does not interpret are kept per element in `unknown` and
// written back by serialize_scene.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "xrpipe/error.hpp"

namespace xrpipe {

using Json = nlohmann::json;

inline constexpr std::string_view kExtMedia = "MPEG_media";
inline constexpr std::string_view kExtCircularBuffer = "MPEG_circular_buffer";
inline constexpr std::string_view kExtTimedAccessors = "MPEG_timed_accessors";
inline constexpr std::string_view kExtVideoTexture = "MPEG_video_texture";
inline constexpr std::string_view kExtSpatialAudio = "MPEG_spatial_audio";

struct Scene {
  std::optional<std::string> name;
  std::vector<std::int64_t> nodes;
  Json unknown = Json::object();
  bool operator==(const Scene&) const = default;
};

struct SceneNode {
  std::optional<std::string> name;
  std::vector<std::int64_t> children;
  std::optional<std::array<double, 16>> matrix;  // column-major, as stored
  std::optional<std::array<double, 3>> translation;
  std::optional<std::array<double, 4>> rotation;  // quaternion x, y, z, w
  std::optional<std::array<double, 3>> scale;
  std::optional<std::int64_t> mesh;
  std::optional<std::int64_t> camera;
  Json unknown = Json::object();
  bool operator==(const SceneNode&) const = default;
};

struct Primitive {
  std::map<std::string, std::int64_t> attributes;
  std::optional<std::int64_t> indices;
  std::optional<std::int64_t> material;
  Json unknown = Json::object();
  bool operator==(const Primitive&) const = default;
};

struct Mesh {
  std::optional<std::string> name;
  std::vector<Primitive> primitives;
  Json unknown = Json::object();
  bool operator==(const Mesh&) const = default;
};

struct Accessor {
  std::optional<std::int64_t> buffer_view;
  std::int64_t component_type = 0;
  std::int64_t count = 0;
  std::string type;
  bool timed = false;
  std::optional<double> suggested_update_rate;
  Json unknown = Json::object();
  bool operator==(const Accessor&) const = default;
};

struct BufferView {
  std::int64_t buffer = 0;
  std::int64_t byte_offset = 0;
  std::int64_t byte_length = 0;
  Json unknown = Json::object();
  bool operator==(const BufferView&) const = default;
};

struct CircularBufferDecl {
  std::int64_t count = 0;  // capacity in frames
  std::int64_t media = 0;
  std::int64_t track = 0;
  bool operator==(const CircularBufferDecl&) const = default;
};

struct Buffer {
  std::int64_t byte_length = 0;
  std::optional<std::string> uri;
  std::optional<CircularBufferDecl> circular;
  Json unknown = Json::object();
  bool operator==(const Buffer&) const = default;
};

struct Texture {
  std::optional<std::int64_t> source;
  std::optional<std::int64_t> video_accessor;
  Json unknown = Json::object();
  bool operator==(const Texture&) const = default;
};

struct Image {
  std::optional<std::string> uri;
  Json unknown = Json::object();
  bool operator==(const Image&) const = default;
};

struct Material {
  std::optional<std::string> name;
  std::optional<std::array<double, 4>> base_color_factor;
  std::optional<std::int64_t> base_color_texture;
  Json unknown = Json::object();
  bool operator==(const Material&) const = default;
};

struct Camera {
  std::string type;
  Json unknown = Json::object();
  bool operator==(const Camera&) const = default;
};

struct MediaTrack {
  std::string track;
  Json unknown = Json::object();
  bool operator==(const MediaTrack&) const = default;
};

struct MediaAlternative {
  std::string uri;
  std::string mime_type;
  std::vector<MediaTrack> tracks;
  Json unknown = Json::object();
  bool operator==(const MediaAlternative&) const = default;
};

struct Media {
  std::string name;
  std::optional<std::string> object_id;  // groups the components of one object
  std::vector<MediaAlternative> alternatives;
  Json unknown = Json::object();
  bool operator==(const Media&) const = default;
};

enum class AudioKind { Source, Mixer, Effect, Listener };
std::string_view to_string(AudioKind kind) noexcept;

struct AudioNode {
  AudioKind kind = AudioKind::Source;
  std::optional<std::int64_t> accessor;  // timed accessor carrying the source media
  std::vector<std::int64_t> inputs;
  std::optional<std::int64_t> node;  // attachment; top-level when absent
  Json unknown = Json::object();
  bool operator==(const AudioNode&) const = default;
};

struct SceneGraph {
  Json asset = Json::object();
  std::optional<std::int64_t> scene;
  std::vector<Scene> scenes;
  std::vector<SceneNode> nodes;
  std::vector<Mesh> meshes;
  std::vector<Accessor> accessors;
  std::vector<BufferView> buffer_views;
  std::vector<Buffer> buffers;
  std::vector<Texture> textures;
  std::vector<Image> images;
  std::vector<Material> materials;
  std::vector<Camera> cameras;
  std::vector<Media> media;
  std::vector<AudioNode> audio_nodes;
  Json unknown = Json::object();
  bool operator==(const SceneGraph&) const = default;
};

struct SceneViolation {
  ErrorCode code = ErrorCode::MalformedDocument;
  std::string path;  // JSON pointer into the document
  std::string message;
  bool operator==(const SceneViolation&) const = default;
};

std::string format_violation(const SceneViolation& v);

/// Structural decoding only; throws MalformedDocument (with a path) on wrong
/// types or missing required members. No cross-reference checks.
SceneGraph decode_scene(const Json& document);

/// decode_scene followed by validate_scene. Throws an Error carrying the code
/// of the first violation.
SceneGraph parse_scene(const Json& document);
SceneGraph parse_scene(std::string_view text);
SceneGraph read_scene_file(const std::string& path);

Json serialize_scene(const SceneGraph& graph);

/// Every violated invariant, in a fixed order. Empty means valid.
std::vector<SceneViolation> validate_scene(const SceneGraph& graph);

/// Non-fatal findings: nodes with more than one parent.
std::vector<SceneViolation> scene_warnings(const SceneGraph& graph);

struct MediaRequest {
  std::int64_t media = 0;
  std::int64_t track = 0;
  std::int64_t buffer = 0;
  auto operator<=>(const MediaRequest&) const = default;
};

/// Requests reachable from any scene through timed mesh accessors, video
/// textures on materials, and audio sources. Sorted by (media, track, buffer).
std::vector<MediaRequest> collect_media_requests(const SceneGraph& graph);

/// Returning false drops the node and its whole subtree.
using CullPredicate = std::function<bool(std::int64_t node, const Eigen::Matrix4d& world)>;

/// Preorder, each node once per scene, first-visited parent chain wins.
std::vector<std::pair<std::int64_t, Eigen::Matrix4d>> flatten_world_transforms(const SceneGraph& graph,
                                                                               std::int64_t scene_index,
                                                                               const CullPredicate& keep = {});

Eigen::Matrix4d local_transform(const SceneNode& node);

}  // namespace xrpipe
