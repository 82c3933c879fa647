#include "xrpipe/scene_description.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace xrpipe {

std::string_view to_string(AudioKind kind) noexcept {
  switch (kind) {
    case AudioKind::Source: return "AudioSource";
    case AudioKind::Mixer: return "AudioMixer";
    case AudioKind::Effect: return "AudioEffect";
    case AudioKind::Listener: return "AudioListener";
  }
  return "Unknown";
}

std::string format_violation(const SceneViolation& v) {
  return std::string(to_string(v.code)) + " at " + (v.path.empty() ? "/" : v.path) + ": " + v.message;
}

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::MalformedDocument, (path.empty() ? "/" : path) + ": " + what);
}

std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

std::int64_t as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) malformed(path, "expected an integer");
  return j.get<std::int64_t>();
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) malformed(path, "expected a number");
  return j.get<double>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) malformed(path, "expected a string");
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& path) {
  if (!j.is_array()) malformed(path, "expected an array");
  return j;
}

std::vector<std::int64_t> as_int_list(const Json& j, const std::string& path) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_int(j[i], child(path, i)));
  return out;
}

template <std::size_t N>
std::array<double, N> as_vec(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) malformed(path, "expected " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = as_number(j[i], child(path, i));
  return out;
}

// Tracks which members were interpreted so the rest can be kept verbatim.
class Members {
 public:
  Members(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) malformed(path_, "expected an object");
  }

  const std::string& path() const { return path_; }

  const Json* get(const std::string& key) {
    taken_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = get(key);
    if (!v) malformed(path_, "missing required member '" + key + "'");
    return *v;
  }

  const Json* extension(std::string_view name) {
    auto ext = j_.find("extensions");
    if (ext == j_.end()) return nullptr;
    if (!ext->is_object()) malformed(child(path_, "extensions"), "expected an object");
    taken_ext_.insert(std::string(name));
    auto it = ext->find(std::string(name));
    return it == ext->end() ? nullptr : &*it;
  }

  Json rest() const {
    Json out = Json::object();
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (taken_.contains(it.key())) continue;
      if (it.key() == "extensions" && it->is_object()) {
        Json ext = Json::object();
        for (auto e = it->begin(); e != it->end(); ++e) {
          if (!taken_ext_.contains(e.key())) ext[e.key()] = *e;
        }
        if (!ext.empty()) out["extensions"] = std::move(ext);
        continue;
      }
      out[it.key()] = *it;
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> taken_;
  std::set<std::string> taken_ext_;
};

std::optional<std::int64_t> opt_int(Members& m, const std::string& key) {
  const Json* v = m.get(key);
  if (!v) return std::nullopt;
  return as_int(*v, child(m.path(), key));
}

std::optional<std::string> opt_string(Members& m, const std::string& key) {
  const Json* v = m.get(key);
  if (!v) return std::nullopt;
  return as_string(*v, child(m.path(), key));
}

template <typename T, typename F>
std::vector<T> decode_list(Members& top, const std::string& key, F&& decode_one) {
  std::vector<T> out;
  const Json* arr = top.get(key);
  if (!arr) return out;
  const std::string path = "/" + key;
  as_array(*arr, path);
  for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(decode_one((*arr)[i], child(path, i)));
  return out;
}

Scene decode_scene_entry(const Json& j, const std::string& path) {
  Members m(j, path);
  Scene s;
  s.name = opt_string(m, "name");
  if (const Json* n = m.get("nodes")) s.nodes = as_int_list(*n, child(path, "nodes"));
  s.unknown = m.rest();
  return s;
}

SceneNode decode_node(const Json& j, const std::string& path) {
  Members m(j, path);
  SceneNode n;
  n.name = opt_string(m, "name");
  if (const Json* c = m.get("children")) n.children = as_int_list(*c, child(path, "children"));
  if (const Json* v = m.get("matrix")) n.matrix = as_vec<16>(*v, child(path, "matrix"));
  if (const Json* v = m.get("translation")) n.translation = as_vec<3>(*v, child(path, "translation"));
  if (const Json* v = m.get("rotation")) n.rotation = as_vec<4>(*v, child(path, "rotation"));
  if (const Json* v = m.get("scale")) n.scale = as_vec<3>(*v, child(path, "scale"));
  if (n.matrix && (n.translation || n.rotation || n.scale)) {
    malformed(path, "matrix and TRS properties are mutually exclusive");
  }
  n.mesh = opt_int(m, "mesh");
  n.camera = opt_int(m, "camera");
  n.unknown = m.rest();
  return n;
}

Primitive decode_primitive(const Json& j, const std::string& path) {
  Members m(j, path);
  Primitive p;
  const Json& attrs = m.require("attributes");
  const std::string apath = child(path, "attributes");
  if (!attrs.is_object()) malformed(apath, "expected an object");
  for (auto it = attrs.begin(); it != attrs.end(); ++it) p.attributes[it.key()] = as_int(*it, child(apath, it.key()));
  p.indices = opt_int(m, "indices");
  p.material = opt_int(m, "material");
  p.unknown = m.rest();
  return p;
}

Mesh decode_mesh(const Json& j, const std::string& path) {
  Members m(j, path);
  Mesh mesh;
  mesh.name = opt_string(m, "name");
  const std::string ppath = child(path, "primitives");
  const Json& prims = as_array(m.require("primitives"), ppath);
  for (std::size_t i = 0; i < prims.size(); ++i) mesh.primitives.push_back(decode_primitive(prims[i], child(ppath, i)));
  mesh.unknown = m.rest();
  return mesh;
}

Accessor decode_accessor(const Json& j, const std::string& path) {
  Members m(j, path);
  Accessor a;
  a.buffer_view = opt_int(m, "bufferView");
  a.component_type = as_int(m.require("componentType"), child(path, "componentType"));
  a.count = as_int(m.require("count"), child(path, "count"));
  a.type = as_string(m.require("type"), child(path, "type"));
  if (const Json* ext = m.extension(kExtTimedAccessors)) {
    const std::string epath = child(child(path, "extensions"), kExtTimedAccessors);
    Members e(*ext, epath);
    a.timed = true;
    if (const Json* r = e.get("suggestedUpdateRate")) a.suggested_update_rate = as_number(*r, child(epath, "suggestedUpdateRate"));
    if (!e.rest().empty()) malformed(epath, "unexpected member");
  }
  a.unknown = m.rest();
  return a;
}

BufferView decode_buffer_view(const Json& j, const std::string& path) {
  Members m(j, path);
  BufferView v;
  v.buffer = as_int(m.require("buffer"), child(path, "buffer"));
  v.byte_offset = opt_int(m, "byteOffset").value_or(0);
  v.byte_length = as_int(m.require("byteLength"), child(path, "byteLength"));
  v.unknown = m.rest();
  return v;
}

Buffer decode_buffer(const Json& j, const std::string& path) {
  Members m(j, path);
  Buffer b;
  b.byte_length = as_int(m.require("byteLength"), child(path, "byteLength"));
  b.uri = opt_string(m, "uri");
  if (const Json* ext = m.extension(kExtCircularBuffer)) {
    const std::string epath = child(child(path, "extensions"), kExtCircularBuffer);
    Members e(*ext, epath);
    CircularBufferDecl c;
    c.count = as_int(e.require("count"), child(epath, "count"));
    c.media = as_int(e.require("media"), child(epath, "media"));
    c.track = opt_int(e, "track").value_or(0);
    if (!e.rest().empty()) malformed(epath, "unexpected member");
    b.circular = c;
  }
  b.unknown = m.rest();
  return b;
}

Texture decode_texture(const Json& j, const std::string& path) {
  Members m(j, path);
  Texture t;
  t.source = opt_int(m, "source");
  if (const Json* ext = m.extension(kExtVideoTexture)) {
    const std::string epath = child(child(path, "extensions"), kExtVideoTexture);
    Members e(*ext, epath);
    t.video_accessor = as_int(e.require("accessor"), child(epath, "accessor"));
    if (!e.rest().empty()) malformed(epath, "unexpected member");
  }
  t.unknown = m.rest();
  return t;
}

Image decode_image(const Json& j, const std::string& path) {
  Members m(j, path);
  Image img;
  img.uri = opt_string(m, "uri");
  img.unknown = m.rest();
  return img;
}

Material decode_material(const Json& j, const std::string& path) {
  Members m(j, path);
  Material mat;
  mat.name = opt_string(m, "name");
  if (const Json* pbr = m.get("pbrMetallicRoughness")) {
    const std::string ppath = child(path, "pbrMetallicRoughness");
    Members p(*pbr, ppath);
    if (const Json* f = p.get("baseColorFactor")) mat.base_color_factor = as_vec<4>(*f, child(ppath, "baseColorFactor"));
    if (const Json* t = p.get("baseColorTexture")) {
      const std::string tpath = child(ppath, "baseColorTexture");
      Members tm(*t, tpath);
      mat.base_color_texture = as_int(tm.require("index"), child(tpath, "index"));
      if (!tm.rest().empty()) malformed(tpath, "unsupported texture-info member");
    }
    if (!p.rest().empty()) malformed(ppath, "only base color factor and texture are supported");
  }
  mat.unknown = m.rest();
  return mat;
}

Camera decode_camera(const Json& j, const std::string& path) {
  Members m(j, path);
  Camera c;
  c.type = as_string(m.require("type"), child(path, "type"));
  c.unknown = m.rest();
  return c;
}

Media decode_media(const Json& j, const std::string& path) {
  Members m(j, path);
  Media media;
  media.name = as_string(m.require("name"), child(path, "name"));
  media.object_id = opt_string(m, "objectId");
  const std::string apath = child(path, "alternatives");
  const Json& alts = as_array(m.require("alternatives"), apath);
  for (std::size_t i = 0; i < alts.size(); ++i) {
    const std::string alt_path = child(apath, i);
    Members a(alts[i], alt_path);
    MediaAlternative alt;
    alt.uri = as_string(a.require("uri"), child(alt_path, "uri"));
    alt.mime_type = as_string(a.require("mimeType"), child(alt_path, "mimeType"));
    if (const Json* tracks = a.get("tracks")) {
      const std::string tpath = child(alt_path, "tracks");
      as_array(*tracks, tpath);
      for (std::size_t k = 0; k < tracks->size(); ++k) {
        Members t((*tracks)[k], child(tpath, k));
        MediaTrack track;
        track.track = as_string(t.require("track"), child(child(tpath, k), "track"));
        track.unknown = t.rest();
        alt.tracks.push_back(std::move(track));
      }
    }
    alt.unknown = a.rest();
    media.alternatives.push_back(std::move(alt));
  }
  media.unknown = m.rest();
  return media;
}

AudioKind parse_audio_kind(const Json& j, const std::string& path) {
  const std::string s = as_string(j, path);
  if (s == "AudioSource") return AudioKind::Source;
  if (s == "AudioMixer") return AudioKind::Mixer;
  if (s == "AudioEffect") return AudioKind::Effect;
  if (s == "AudioListener") return AudioKind::Listener;
  malformed(path, "unknown audio node type '" + s + "'");
}

AudioNode decode_audio_node(const Json& j, const std::string& path) {
  Members m(j, path);
  AudioNode a;
  a.kind = parse_audio_kind(m.require("type"), child(path, "type"));
  a.accessor = opt_int(m, "accessor");
  if (const Json* in = m.get("inputs")) a.inputs = as_int_list(*in, child(path, "inputs"));
  a.node = opt_int(m, "node");
  a.unknown = m.rest();
  return a;
}

std::string media_path(std::size_t i) { return "/extensions/MPEG_media/media/" + std::to_string(i); }
std::string audio_path(std::size_t i) { return "/extensions/MPEG_spatial_audio/audioNodes/" + std::to_string(i); }

void put_unknown(Json& out, const Json& unknown) {
  for (auto it = unknown.begin(); it != unknown.end(); ++it) {
    if (it.key() == "extensions" && out.contains("extensions")) {
      for (auto e = it->begin(); e != it->end(); ++e) out["extensions"][e.key()] = *e;
    } else {
      out[it.key()] = *it;
    }
  }
}

template <typename T>
void put_opt(Json& out, const char* key, const std::optional<T>& v) {
  if (v) out[key] = *v;
}

}  // namespace

SceneGraph decode_scene(const Json& document) {
  Members top(document, "");
  SceneGraph g;
  const Json& asset = top.require("asset");
  if (!asset.is_object()) malformed("/asset", "expected an object");
  g.asset = asset;
  g.scene = opt_int(top, "scene");
  g.scenes = decode_list<Scene>(top, "scenes", decode_scene_entry);
  g.nodes = decode_list<SceneNode>(top, "nodes", decode_node);
  g.meshes = decode_list<Mesh>(top, "meshes", decode_mesh);
  g.accessors = decode_list<Accessor>(top, "accessors", decode_accessor);
  g.buffer_views = decode_list<BufferView>(top, "bufferViews", decode_buffer_view);
  g.buffers = decode_list<Buffer>(top, "buffers", decode_buffer);
  g.textures = decode_list<Texture>(top, "textures", decode_texture);
  g.images = decode_list<Image>(top, "images", decode_image);
  g.materials = decode_list<Material>(top, "materials", decode_material);
  g.cameras = decode_list<Camera>(top, "cameras", decode_camera);

  if (const Json* ext = top.extension(kExtMedia)) {
    Members e(*ext, "/extensions/MPEG_media");
    const Json& list = as_array(e.require("media"), "/extensions/MPEG_media/media");
    for (std::size_t i = 0; i < list.size(); ++i) g.media.push_back(decode_media(list[i], media_path(i)));
    if (!e.rest().empty()) malformed("/extensions/MPEG_media", "unexpected member");
  }
  if (const Json* ext = top.extension(kExtSpatialAudio)) {
    Members e(*ext, "/extensions/MPEG_spatial_audio");
    const Json& list = as_array(e.require("audioNodes"), "/extensions/MPEG_spatial_audio/audioNodes");
    for (std::size_t i = 0; i < list.size(); ++i) g.audio_nodes.push_back(decode_audio_node(list[i], audio_path(i)));
    if (!e.rest().empty()) malformed("/extensions/MPEG_spatial_audio", "unexpected member");
  }
  g.unknown = top.rest();
  return g;
}

SceneGraph parse_scene(const Json& document) {
  SceneGraph g = decode_scene(document);
  const auto violations = validate_scene(g);
  if (!violations.empty()) {
    const SceneViolation& v = violations.front();
    throw Error(v.code, (v.path.empty() ? "/" : v.path) + ": " + v.message);
  }
  return g;
}

SceneGraph parse_scene(std::string_view text) {
  Json doc = Json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedDocument, "not well-formed JSON");
  return parse_scene(doc);
}

SceneGraph read_scene_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedDocument, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(std::string_view(ss.str()));
}

Json serialize_scene(const SceneGraph& g) {
  Json out = Json::object();
  out["asset"] = g.asset;
  put_opt(out, "scene", g.scene);

  auto emit = [&](const char* key, const auto& list, auto&& one) {
    if (list.empty()) return;
    Json arr = Json::array();
    for (const auto& e : list) {
      Json j = Json::object();
      one(j, e);
      put_unknown(j, e.unknown);
      arr.push_back(std::move(j));
    }
    out[key] = std::move(arr);
  };

  emit("scenes", g.scenes, [](Json& j, const Scene& s) {
    put_opt(j, "name", s.name);
    if (!s.nodes.empty()) j["nodes"] = s.nodes;
  });
  emit("nodes", g.nodes, [](Json& j, const SceneNode& n) {
    put_opt(j, "name", n.name);
    if (!n.children.empty()) j["children"] = n.children;
    put_opt(j, "matrix", n.matrix);
    put_opt(j, "translation", n.translation);
    put_opt(j, "rotation", n.rotation);
    put_opt(j, "scale", n.scale);
    put_opt(j, "mesh", n.mesh);
    put_opt(j, "camera", n.camera);
  });
  emit("meshes", g.meshes, [](Json& j, const Mesh& m) {
    put_opt(j, "name", m.name);
    Json prims = Json::array();
    for (const Primitive& p : m.primitives) {
      Json pj = Json::object();
      pj["attributes"] = Json::object();
      for (const auto& [k, v] : p.attributes) pj["attributes"][k] = v;
      put_opt(pj, "indices", p.indices);
      put_opt(pj, "material", p.material);
      put_unknown(pj, p.unknown);
      prims.push_back(std::move(pj));
    }
    j["primitives"] = std::move(prims);
  });
  emit("accessors", g.accessors, [](Json& j, const Accessor& a) {
    put_opt(j, "bufferView", a.buffer_view);
    j["componentType"] = a.component_type;
    j["count"] = a.count;
    j["type"] = a.type;
    if (a.timed) {
      Json ext = Json::object();
      put_opt(ext, "suggestedUpdateRate", a.suggested_update_rate);
      j["extensions"][std::string(kExtTimedAccessors)] = std::move(ext);
    }
  });
  emit("bufferViews", g.buffer_views, [](Json& j, const BufferView& v) {
    j["buffer"] = v.buffer;
    if (v.byte_offset != 0) j["byteOffset"] = v.byte_offset;
    j["byteLength"] = v.byte_length;
  });
  emit("buffers", g.buffers, [](Json& j, const Buffer& b) {
    j["byteLength"] = b.byte_length;
    put_opt(j, "uri", b.uri);
    if (b.circular) {
      j["extensions"][std::string(kExtCircularBuffer)] = {
          {"count", b.circular->count}, {"media", b.circular->media}, {"track", b.circular->track}};
    }
  });
  emit("textures", g.textures, [](Json& j, const Texture& t) {
    put_opt(j, "source", t.source);
    if (t.video_accessor) j["extensions"][std::string(kExtVideoTexture)] = {{"accessor", *t.video_accessor}};
  });
  emit("images", g.images, [](Json& j, const Image& i) { put_opt(j, "uri", i.uri); });
  emit("materials", g.materials, [](Json& j, const Material& m) {
    put_opt(j, "name", m.name);
    if (m.base_color_factor || m.base_color_texture) {
      Json pbr = Json::object();
      put_opt(pbr, "baseColorFactor", m.base_color_factor);
      if (m.base_color_texture) pbr["baseColorTexture"] = {{"index", *m.base_color_texture}};
      j["pbrMetallicRoughness"] = std::move(pbr);
    }
  });
  emit("cameras", g.cameras, [](Json& j, const Camera& c) { j["type"] = c.type; });

  if (!g.media.empty()) {
    Json list = Json::array();
    for (const Media& m : g.media) {
      Json mj = {{"name", m.name}};
      put_opt(mj, "objectId", m.object_id);
      Json alts = Json::array();
      for (const MediaAlternative& a : m.alternatives) {
        Json aj = {{"uri", a.uri}, {"mimeType", a.mime_type}};
        if (!a.tracks.empty()) {
          Json tracks = Json::array();
          for (const MediaTrack& t : a.tracks) {
            Json tj = {{"track", t.track}};
            put_unknown(tj, t.unknown);
            tracks.push_back(std::move(tj));
          }
          aj["tracks"] = std::move(tracks);
        }
        put_unknown(aj, a.unknown);
        alts.push_back(std::move(aj));
      }
      mj["alternatives"] = std::move(alts);
      put_unknown(mj, m.unknown);
      list.push_back(std::move(mj));
    }
    out["extensions"][std::string(kExtMedia)] = {{"media", std::move(list)}};
  }
  if (!g.audio_nodes.empty()) {
    Json list = Json::array();
    for (const AudioNode& a : g.audio_nodes) {
      Json aj = {{"type", std::string(to_string(a.kind))}};
      put_opt(aj, "accessor", a.accessor);
      if (!a.inputs.empty()) aj["inputs"] = a.inputs;
      put_opt(aj, "node", a.node);
      put_unknown(aj, a.unknown);
      list.push_back(std::move(aj));
    }
    out["extensions"][std::string(kExtSpatialAudio)] = {{"audioNodes", std::move(list)}};
  }
  put_unknown(out, g.unknown);
  return out;
}

namespace {

class Checker {
 public:
  explicit Checker(const SceneGraph& g) : g_(g) {}

  std::vector<SceneViolation> run() {
    references();
    node_cycles();
    timed_accessors();
    video_textures();
    circular_buffers();
    buffer_views();
    media_names();
    audio();
    return std::move(out_);
  }

 private:
  void add(ErrorCode code, std::string path, std::string message) {
    out_.push_back({code, std::move(path), std::move(message)});
  }

  bool ref(std::optional<std::int64_t> idx, std::size_t size, const std::string& path, const char* target) {
    if (!idx) return false;
    if (*idx < 0 || static_cast<std::size_t>(*idx) >= size) {
      add(ErrorCode::DanglingReference, path,
          "index " + std::to_string(*idx) + " outside " + target + "[" + std::to_string(size) + "]");
      return false;
    }
    return true;
  }

  static bool in(std::optional<std::int64_t> idx, std::size_t size) {
    return idx && *idx >= 0 && static_cast<std::size_t>(*idx) < size;
  }

  void references() {
    ref(g_.scene, g_.scenes.size(), "/scene", "scenes");
    for (std::size_t i = 0; i < g_.scenes.size(); ++i) {
      for (std::size_t k = 0; k < g_.scenes[i].nodes.size(); ++k) {
        ref(g_.scenes[i].nodes[k], g_.nodes.size(), "/scenes/" + std::to_string(i) + "/nodes/" + std::to_string(k),
            "nodes");
      }
    }
    for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
      const SceneNode& n = g_.nodes[i];
      const std::string p = "/nodes/" + std::to_string(i);
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        ref(n.children[k], g_.nodes.size(), p + "/children/" + std::to_string(k), "nodes");
      }
      ref(n.mesh, g_.meshes.size(), p + "/mesh", "meshes");
      ref(n.camera, g_.cameras.size(), p + "/camera", "cameras");
    }
    for (std::size_t i = 0; i < g_.meshes.size(); ++i) {
      for (std::size_t k = 0; k < g_.meshes[i].primitives.size(); ++k) {
        const Primitive& prim = g_.meshes[i].primitives[k];
        const std::string p = "/meshes/" + std::to_string(i) + "/primitives/" + std::to_string(k);
        for (const auto& [name, idx] : prim.attributes) {
          ref(idx, g_.accessors.size(), p + "/attributes/" + name, "accessors");
        }
        ref(prim.indices, g_.accessors.size(), p + "/indices", "accessors");
        ref(prim.material, g_.materials.size(), p + "/material", "materials");
      }
    }
    for (std::size_t i = 0; i < g_.accessors.size(); ++i) {
      ref(g_.accessors[i].buffer_view, g_.buffer_views.size(), "/accessors/" + std::to_string(i) + "/bufferView",
          "bufferViews");
    }
    for (std::size_t i = 0; i < g_.buffer_views.size(); ++i) {
      ref(g_.buffer_views[i].buffer, g_.buffers.size(), "/bufferViews/" + std::to_string(i) + "/buffer", "buffers");
    }
    for (std::size_t i = 0; i < g_.buffers.size(); ++i) {
      if (g_.buffers[i].circular) {
        ref(g_.buffers[i].circular->media, g_.media.size(),
            "/buffers/" + std::to_string(i) + "/extensions/MPEG_circular_buffer/media", "media");
      }
    }
    for (std::size_t i = 0; i < g_.textures.size(); ++i) {
      const std::string p = "/textures/" + std::to_string(i);
      ref(g_.textures[i].source, g_.images.size(), p + "/source", "images");
      ref(g_.textures[i].video_accessor, g_.accessors.size(), p + "/extensions/MPEG_video_texture/accessor",
          "accessors");
    }
    for (std::size_t i = 0; i < g_.materials.size(); ++i) {
      ref(g_.materials[i].base_color_texture, g_.textures.size(),
          "/materials/" + std::to_string(i) + "/pbrMetallicRoughness/baseColorTexture/index", "textures");
    }
    for (std::size_t i = 0; i < g_.audio_nodes.size(); ++i) {
      const AudioNode& a = g_.audio_nodes[i];
      const std::string p = audio_path(i);
      ref(a.accessor, g_.accessors.size(), p + "/accessor", "accessors");
      ref(a.node, g_.nodes.size(), p + "/node", "nodes");
      for (std::size_t k = 0; k < a.inputs.size(); ++k) {
        ref(a.inputs[k], g_.audio_nodes.size(), p + "/inputs/" + std::to_string(k), "audioNodes");
      }
    }
  }

  // Iterative three-colour DFS; every back edge is one violation.
  template <typename Edges>
  void find_cycles(std::size_t count, Edges&& edges, const std::string& prefix, const char* what) {
    enum Colour : std::uint8_t { White, Grey, Black };
    std::vector<Colour> colour(count, White);
    for (std::size_t root = 0; root < count; ++root) {
      if (colour[root] != White) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
      colour[root] = Grey;
      while (!stack.empty()) {
        auto& [n, next] = stack.back();
        const std::vector<std::int64_t>& out = edges(n);
        if (next == out.size()) {
          colour[n] = Black;
          stack.pop_back();
          continue;
        }
        const std::size_t edge = next++;
        const std::int64_t c = out[edge];
        if (c < 0 || static_cast<std::size_t>(c) >= count) continue;
        if (colour[c] == Grey) {
          add(ErrorCode::CycleDetected, prefix + std::to_string(n),
              std::string(what) + " " + std::to_string(c) + " is its own ancestor");
        } else if (colour[c] == White) {
          colour[c] = Grey;
          stack.emplace_back(static_cast<std::size_t>(c), 0);
        }
      }
    }
  }

  void node_cycles() {
    find_cycles(
        g_.nodes.size(), [&](std::size_t n) -> const std::vector<std::int64_t>& { return g_.nodes[n].children; },
        "/nodes/", "node");
  }

  bool accessor_on_circular(const Accessor& a) const {
    if (!in(a.buffer_view, g_.buffer_views.size())) return false;
    const BufferView& v = g_.buffer_views[*a.buffer_view];
    return in(v.buffer, g_.buffers.size()) && g_.buffers[v.buffer].circular.has_value();
  }

  void timed_accessors() {
    for (std::size_t i = 0; i < g_.accessors.size(); ++i) {
      const Accessor& a = g_.accessors[i];
      if (!a.timed) continue;
      if (a.buffer_view && !in(a.buffer_view, g_.buffer_views.size())) continue;  // already dangling
      if (a.buffer_view) {
        const BufferView& v = g_.buffer_views[*a.buffer_view];
        if (!in(v.buffer, g_.buffers.size())) continue;
      }
      if (!accessor_on_circular(a)) {
        add(ErrorCode::TimedWithoutCircular, "/accessors/" + std::to_string(i),
            "timed accessor is not backed by a buffer with MPEG_circular_buffer");
      }
    }
  }

  void video_textures() {
    for (std::size_t i = 0; i < g_.textures.size(); ++i) {
      const auto& acc = g_.textures[i].video_accessor;
      if (in(acc, g_.accessors.size()) && !g_.accessors[*acc].timed) {
        add(ErrorCode::VideoTextureNotTimed, "/textures/" + std::to_string(i) + "/extensions/MPEG_video_texture/accessor",
            "accessor " + std::to_string(*acc) + " is not timed");
      }
    }
  }

  void circular_buffers() {
    for (std::size_t i = 0; i < g_.buffers.size(); ++i) {
      const auto& c = g_.buffers[i].circular;
      if (!c) continue;
      const std::string p = "/buffers/" + std::to_string(i) + "/extensions/MPEG_circular_buffer";
      if (c->count < 1) add(ErrorCode::InvalidCircularBuffer, p + "/count", "frame count must be at least 1");
      if (!in(c->media, g_.media.size())) continue;
      const Media& m = g_.media[c->media];
      if (m.alternatives.empty()) {
        add(ErrorCode::InvalidCircularBuffer, p + "/media", "media '" + m.name + "' has no alternatives");
        continue;
      }
      const auto tracks = static_cast<std::int64_t>(m.alternatives.front().tracks.size());
      const std::int64_t limit = std::max<std::int64_t>(tracks, 1);
      if (c->track < 0 || c->track >= limit) {
        add(ErrorCode::InvalidCircularBuffer, p + "/track",
            "track " + std::to_string(c->track) + " not in media '" + m.name + "'");
      }
    }
  }

  void buffer_views() {
    for (std::size_t i = 0; i < g_.buffer_views.size(); ++i) {
      const BufferView& v = g_.buffer_views[i];
      if (!in(v.buffer, g_.buffers.size())) continue;
      if (v.byte_offset < 0 || v.byte_length < 0 || v.byte_offset + v.byte_length > g_.buffers[v.buffer].byte_length) {
        add(ErrorCode::BufferViewOutOfRange, "/bufferViews/" + std::to_string(i),
            "range [" + std::to_string(v.byte_offset) + ", " + std::to_string(v.byte_offset + v.byte_length) +
                ") exceeds buffer length " + std::to_string(g_.buffers[v.buffer].byte_length));
      }
    }
  }

  void media_names() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < g_.media.size(); ++i) {
      if (!seen.insert(g_.media[i].name).second) {
        add(ErrorCode::MalformedDocument, media_path(i) + "/name", "duplicate media name '" + g_.media[i].name + "'");
      }
    }
  }

  void audio() {
    const std::size_t count = g_.audio_nodes.size();
    for (std::size_t i = 0; i < count; ++i) {
      const AudioNode& a = g_.audio_nodes[i];
      const std::string p = audio_path(i);
      switch (a.kind) {
        case AudioKind::Source:
          if (!a.accessor) {
            add(ErrorCode::InvalidAudioWiring, p, "AudioSource needs an accessor");
          } else if (in(a.accessor, g_.accessors.size()) && !g_.accessors[*a.accessor].timed) {
            add(ErrorCode::InvalidAudioWiring, p + "/accessor", "AudioSource accessor is not timed");
          }
          if (!a.inputs.empty()) add(ErrorCode::InvalidAudioWiring, p + "/inputs", "AudioSource takes no inputs");
          break;
        case AudioKind::Mixer:
          if (a.inputs.empty()) add(ErrorCode::InvalidAudioWiring, p + "/inputs", "AudioMixer needs at least one input");
          break;
        case AudioKind::Effect:
          if (a.inputs.size() > 1) add(ErrorCode::InvalidAudioWiring, p + "/inputs", "AudioEffect takes at most one input");
          break;
        case AudioKind::Listener:
          break;
      }
      if (a.kind != AudioKind::Source && a.accessor) {
        add(ErrorCode::InvalidAudioWiring, p + "/accessor", "only AudioSource carries media");
      }
      for (std::size_t k = 0; k < a.inputs.size(); ++k) {
        if (in(a.inputs[k], count) && g_.audio_nodes[a.inputs[k]].kind == AudioKind::Listener) {
          add(ErrorCode::ListenerHasOutput, p + "/inputs/" + std::to_string(k),
              "AudioListener " + std::to_string(a.inputs[k]) + " cannot feed another node");
        }
      }
    }
    find_cycles(
        count, [&](std::size_t n) -> const std::vector<std::int64_t>& { return g_.audio_nodes[n].inputs; },
        "/extensions/MPEG_spatial_audio/audioNodes/", "audio node");
  }

  const SceneGraph& g_;
  std::vector<SceneViolation> out_;
};

}  // namespace

std::vector<SceneViolation> validate_scene(const SceneGraph& graph) { return Checker(graph).run(); }

std::vector<SceneViolation> scene_warnings(const SceneGraph& graph) {
  const std::size_t count = graph.nodes.size();
  std::vector<std::set<std::int64_t>> parents(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::int64_t c : graph.nodes[i].children) {
      if (c >= 0 && static_cast<std::size_t>(c) < count) parents[c].insert(static_cast<std::int64_t>(i));
    }
  }
  std::vector<bool> is_root(count, false);
  for (const Scene& s : graph.scenes) {
    for (std::int64_t n : s.nodes) {
      if (n >= 0 && static_cast<std::size_t>(n) < count) is_root[n] = true;
    }
  }
  std::vector<SceneViolation> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t total = parents[i].size() + (is_root[i] ? 1 : 0);
    if (total > 1) {
      out.push_back({ErrorCode::MultiParentNode, "/nodes/" + std::to_string(i),
                     "node has " + std::to_string(total) + " parents"});
    }
  }
  return out;
}

std::vector<MediaRequest> collect_media_requests(const SceneGraph& g) {
  auto valid = [](std::optional<std::int64_t> idx, std::size_t size) {
    return idx && *idx >= 0 && static_cast<std::size_t>(*idx) < size;
  };

  std::set<MediaRequest> requests;
  auto from_accessor = [&](std::optional<std::int64_t> idx) {
    if (!valid(idx, g.accessors.size())) return;
    const Accessor& a = g.accessors[*idx];
    if (!a.timed || !valid(a.buffer_view, g.buffer_views.size())) return;
    const std::int64_t buffer = g.buffer_views[*a.buffer_view].buffer;
    if (!valid(buffer, g.buffers.size()) || !g.buffers[buffer].circular) return;
    const CircularBufferDecl& c = *g.buffers[buffer].circular;
    requests.insert({c.media, c.track, buffer});
  };

  std::vector<bool> reached(g.nodes.size(), false);
  std::vector<std::int64_t> stack;
  for (const Scene& s : g.scenes) stack.insert(stack.end(), s.nodes.begin(), s.nodes.end());
  while (!stack.empty()) {
    const std::int64_t n = stack.back();
    stack.pop_back();
    if (!valid(n, g.nodes.size()) || reached[n]) continue;
    reached[n] = true;
    const SceneNode& node = g.nodes[n];
    stack.insert(stack.end(), node.children.begin(), node.children.end());
    if (!valid(node.mesh, g.meshes.size())) continue;
    for (const Primitive& p : g.meshes[*node.mesh].primitives) {
      for (const auto& [name, idx] : p.attributes) from_accessor(idx);
      from_accessor(p.indices);
      if (!valid(p.material, g.materials.size())) continue;
      const auto& tex = g.materials[*p.material].base_color_texture;
      if (valid(tex, g.textures.size())) from_accessor(g.textures[*tex].video_accessor);
    }
  }
  for (const AudioNode& a : g.audio_nodes) {
    if (a.kind != AudioKind::Source) continue;
    if (a.node && !(valid(a.node, g.nodes.size()) && reached[*a.node])) continue;
    from_accessor(a.accessor);
  }
  return {requests.begin(), requests.end()};
}

Eigen::Matrix4d local_transform(const SceneNode& node) {
  if (node.matrix) return Eigen::Map<const Eigen::Matrix4d>(node.matrix->data());
  Eigen::Affine3d t = Eigen::Affine3d::Identity();
  if (node.translation) t.translate(Eigen::Vector3d((*node.translation)[0], (*node.translation)[1], (*node.translation)[2]));
  if (node.rotation) {
    const auto& r = *node.rotation;
    t.rotate(Eigen::Quaterniond(r[3], r[0], r[1], r[2]).normalized());
  }
  if (node.scale) t.scale(Eigen::Vector3d((*node.scale)[0], (*node.scale)[1], (*node.scale)[2]));
  return t.matrix();
}

std::vector<std::pair<std::int64_t, Eigen::Matrix4d>> flatten_world_transforms(const SceneGraph& graph,
                                                                               std::int64_t scene_index,
                                                                               const CullPredicate& keep) {
  if (scene_index < 0 || static_cast<std::size_t>(scene_index) >= graph.scenes.size()) {
    throw Error(ErrorCode::DanglingReference, "scene " + std::to_string(scene_index) + " does not exist");
  }
  std::vector<std::pair<std::int64_t, Eigen::Matrix4d>> out;
  std::vector<bool> visited(graph.nodes.size(), false);

  struct Pending {
    std::int64_t node;
    Eigen::Matrix4d parent;
  };
  std::vector<Pending> stack;
  const auto& roots = graph.scenes[scene_index].nodes;
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) stack.push_back({*it, Eigen::Matrix4d::Identity()});
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    if (p.node < 0 || static_cast<std::size_t>(p.node) >= graph.nodes.size() || visited[p.node]) continue;
    visited[p.node] = true;
    const SceneNode& node = graph.nodes[p.node];
    const Eigen::Matrix4d world = p.parent * local_transform(node);
    if (keep && !keep(p.node, world)) continue;
    out.emplace_back(p.node, world);
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back({*it, world});
  }
  return out;
}

}  // namespace xrpipe
