#include "support.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

namespace xrpipe::testing {

std::filesystem::path fixture_dir() { return XRPIPE_FIXTURE_DIR; }
std::filesystem::path data_dir() { return XRPIPE_DATA_DIR; }
std::filesystem::path scenario_dir() { return XRPIPE_SCENARIO_DIR; }
std::filesystem::path cli_path() { return XRPIPE_CLI_PATH; }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  return Json::parse(in);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AccessUnit picture_unit(std::uint32_t stream_id, std::uint32_t poc, Ticks dts, Ticks pts, std::uint16_t w,
                        std::uint16_t h, Bytes payload, std::uint8_t col, std::uint8_t row) {
  AccessUnit u;
  u.stream_id = stream_id;
  u.poc = poc;
  u.dts = dts;
  u.pts = pts;
  u.width = w;
  u.height = h;
  u.tile_col = col;
  u.tile_row = row;
  u.payload = std::move(payload);
  return u;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

ToyStream random_source(std::mt19937_64& rng, std::uint32_t stream_id, std::uint16_t w, std::uint16_t h,
                        const std::vector<Ticks>& dts) {
  ToyStream s;
  s.stream_id = stream_id;
  s.codec_profile = CodecProfile::ToyBase;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 48)(rng);
    s.units.push_back(picture_unit(stream_id, static_cast<std::uint32_t>(i), dts[i], dts[i], w, h, random_bytes(rng, len)));
  }
  return s;
}

Bytes compose_planes(const std::vector<DecodedPicture>& slots, std::size_t cols, std::size_t rows) {
  std::vector<std::size_t> widths(cols), heights(rows), x0(cols + 1, 0), y0(rows + 1, 0);
  for (std::size_t c = 0; c < cols; ++c) widths[c] = slots[c].width;
  for (std::size_t r = 0; r < rows; ++r) heights[r] = slots[r * cols].height;
  for (std::size_t c = 0; c < cols; ++c) x0[c + 1] = x0[c] + widths[c];
  for (std::size_t r = 0; r < rows; ++r) y0[r + 1] = y0[r] + heights[r];
  const std::size_t width = x0[cols];
  Bytes out(width * y0[rows], 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const DecodedPicture& p = slots[r * cols + c];
      for (std::size_t y = 0; y < p.height; ++y) {
        std::copy_n(p.pixels.begin() + static_cast<std::ptrdiff_t>(y * p.width), p.width,
                    out.begin() + static_cast<std::ptrdiff_t>((y0[r] + y) * width + x0[c]));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- ring model

std::uint64_t ReferenceRing::write(Bytes data, Ticks ts) {
  if (frames_.size() == capacity_) {
    frames_.pop_front();
    ++evictions_;
  }
  frames_.push_back(Frame{next_, ts, std::move(data)});
  return next_++;
}

std::optional<Frame> ReferenceRing::read() {
  if (frames_.empty()) return std::nullopt;
  Frame f = frames_.front();
  frames_.pop_front();
  return f;
}

std::optional<Frame> ReferenceRing::read_at(const FrameSelector& sel, ErrorCode* code) const {
  if (const auto* i = std::get_if<FrameIndex>(&sel)) {
    for (const Frame& f : frames_) {
      if (f.index == i->value) return f;
    }
    *code = ErrorCode::NotStored;
    return std::nullopt;
  }
  const Ticks t = std::get<FrameTime>(sel).value;
  std::optional<Frame> best;
  for (const Frame& f : frames_) {
    if (f.timestamp <= t) best = f;
  }
  if (!best) *code = ErrorCode::NoFrameAtOrBefore;
  return best;
}

namespace {

std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Bytes checksummed_payload(std::mt19937_64& rng, std::uint64_t seq, std::size_t max_len) {
  const std::size_t body = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  Bytes b(8 + body + 8);
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(seq >> (8 * i));
  for (std::size_t i = 0; i < body; ++i) b[8 + i] = static_cast<std::uint8_t>(rng());
  const std::uint64_t h = fnv1a(b.data(), 8 + body);
  for (int i = 0; i < 8; ++i) b[8 + body + i] = static_cast<std::uint8_t>(h >> (8 * i));
  return b;
}

bool checksum_ok(const Bytes& payload) {
  if (payload.size() < 16) return false;
  const std::size_t n = payload.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(payload[n + i]) << (8 * i);
  return stored == fnv1a(payload.data(), n);
}

// ---------------------------------------------------------------- scenes

Json component_scene(const std::vector<std::string>& media, const std::string& object, std::int64_t count) {
  Json d = {{"asset", {{"version", "2.0"}}},
            {"scene", 0},
            {"scenes", Json::array({{{"nodes", {0}}}})},
            {"nodes", Json::array({{{"name", object}, {"mesh", 0}}})},
            {"meshes", Json::array({{{"primitives", Json::array()}}})},
            {"accessors", Json::array()},
            {"bufferViews", Json::array()},
            {"buffers", Json::array()},
            {"textures", Json::array()},
            {"materials", Json::array()},
            {"extensions", {{"MPEG_media", {{"media", Json::array()}}}}}};
  for (std::size_t i = 0; i < media.size(); ++i) {
    const auto idx = static_cast<std::int64_t>(i);
    d["extensions"]["MPEG_media"]["media"].push_back(
        {{"name", media[i]},
         {"objectId", object},
         {"alternatives", Json::array({{{"uri", media[i] + ".toys"},
                                        {"mimeType", "video/x-toy"},
                                        {"tracks", Json::array({{{"track", "#track=0"}}})}}})}});
    d["buffers"].push_back({{"byteLength", 4096}, {"extensions", {{"MPEG_circular_buffer", {{"count", count}, {"media", idx}}}}}});
    d["bufferViews"].push_back({{"buffer", idx}, {"byteLength", 4096}});
    d["accessors"].push_back({{"bufferView", idx},
                              {"componentType", 5121},
                              {"count", 4096},
                              {"type", "SCALAR"},
                              {"extensions", {{"MPEG_timed_accessors", Json::object()}}}});
    d["textures"].push_back({{"extensions", {{"MPEG_video_texture", {{"accessor", idx}}}}}});
    d["materials"].push_back({{"pbrMetallicRoughness", {{"baseColorTexture", {{"index", idx}}}}}});
    d["meshes"][0]["primitives"].push_back({{"attributes", Json::object()}, {"material", idx}});
  }
  return d;
}

Scenario component_scenario(const std::vector<std::string>& media, const std::vector<std::uint32_t>& rates,
                            Grouping grouping, std::uint32_t tolerance, std::uint32_t frames, std::uint32_t steps,
                            Ticks tick_per_step, std::int64_t count) {
  Scenario s;
  s.scene = component_scene(media, "object", count);
  s.envelope = EngineEnvelope::from_samples_per_second(3840LL * 2160 * 60, static_cast<std::uint32_t>(media.size()),
                                                       4096, 2304);
  for (std::size_t i = 0; i < media.size(); ++i) {
    TestStreamSpec spec;
    spec.stream_id = static_cast<std::uint32_t>(i);
    spec.frames = frames;
    spec.payload_bytes = 8;
    s.streams[media[i]] = make_test_stream(spec);
    s.decode_rates[media[i]] = rates[i];
  }
  s.grouping = grouping;
  s.skew_tolerance_pocs = tolerance;
  s.steps = steps;
  s.presentation_tick_per_step = tick_per_step;
  return s;
}

std::map<std::string, std::int64_t> skew_from_steps(const SyncReport& report) {
  std::map<std::string, std::int64_t> out;
  for (const PresentationStep& step : report.steps) {
    for (const auto& [object, components] : step.pocs) {
      std::optional<std::int64_t> lo, hi;
      for (const auto& [name, poc] : components) {
        if (!poc) continue;
        lo = std::min<std::int64_t>(lo.value_or(*poc), *poc);
        hi = std::max<std::int64_t>(hi.value_or(*poc), *poc);
      }
      auto& best = out[object];
      if (lo) best = std::max(best, *hi - *lo);
    }
  }
  return out;
}

// ---------------------------------------------------------------- updates

namespace {

Json tag(std::string t) { return {{"tag", std::move(t)}}; }

std::string fresh(const std::string& kind, std::uint64_t& next) { return kind + "#" + std::to_string(next++); }

template <typename T>
T pick(std::mt19937_64& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::size_t size_of(const Json& doc, const char* key) { return doc.contains(key) ? doc[key].size() : 0; }

PatchOperation op(PatchOp kind, std::string path, std::optional<Json> value = std::nullopt,
                  std::optional<std::string> from = std::nullopt) {
  return PatchOperation{kind, std::move(path), std::move(from), std::move(value)};
}

std::string at(const char* array, std::size_t i) { return std::string("/") + array + "/" + std::to_string(i); }

/// Ops removing every reference to nodes[x] from scenes and parents, then x.
std::vector<PatchOperation> remove_node_cleanly(const Json& doc, std::size_t x) {
  std::vector<PatchOperation> ops;
  auto strip = [&](const char* array, const char* field) {
    for (std::size_t h = 0; h < size_of(doc, array); ++h) {
      const Json& holder = doc[array][h];
      if (!holder.contains(field)) continue;
      const Json& list = holder[field];
      for (std::size_t k = list.size(); k-- > 0;) {
        if (list[k] == x) ops.push_back(op(PatchOp::Remove, at(array, h) + "/" + field + "/" + std::to_string(k)));
      }
    }
  };
  strip("scenes", "nodes");
  strip("nodes", "children");
  ops.push_back(op(PatchOp::Remove, at("nodes", x)));
  return ops;
}

bool node_referenced(const Json& doc, std::size_t x) {
  for (const auto& s : doc["scenes"]) {
    for (const auto& n : s.value("nodes", Json::array())) {
      if (n == x) return true;
    }
  }
  for (const auto& n : doc["nodes"]) {
    for (const auto& c : n.value("children", Json::array())) {
      if (c == x) return true;
    }
  }
  return false;
}

}  // namespace

Json tagged_scene(std::mt19937_64& rng, std::uint64_t& next) {
  Json d = {{"asset", {{"version", "2.0"}}}};

  // Static geometry: one buffer, one view + accessor per mesh slot.
  const std::size_t accessors = pick<std::size_t>(rng, 3, 5);
  d["buffers"] = Json::array({{{"byteLength", 64 * accessors}, {"uri", "geometry.bin"}, {"extras", tag(fresh("buffer", next))}}});
  d["bufferViews"] = Json::array();
  d["accessors"] = Json::array();
  for (std::size_t i = 0; i < accessors; ++i) {
    d["bufferViews"].push_back({{"buffer", 0}, {"byteOffset", 64 * i}, {"byteLength", 48}, {"extras", tag(fresh("view", next))}});
    d["accessors"].push_back({{"bufferView", i}, {"componentType", 5126}, {"count", 4}, {"type", "VEC3"},
                              {"extras", tag(fresh("accessor", next))}});
  }

  // One video component: media -> circular buffer -> view -> timed accessor
  // -> video texture -> material 0.
  d["extensions"]["MPEG_media"]["media"] = Json::array(
      {{{"name", "video"},
        {"alternatives", Json::array({{{"uri", "video.toys"}, {"mimeType", "video/x-toy"}, {"tracks", Json::array({{{"track", "#track=0"}}})}}})},
        {"extras", tag(fresh("media", next))}}});
  d["buffers"].push_back({{"byteLength", 4096}, {"extensions", {{"MPEG_circular_buffer", {{"count", 4}, {"media", 0}}}}},
                          {"extras", tag(fresh("buffer", next))}});
  d["bufferViews"].push_back({{"buffer", 1}, {"byteLength", 4096}, {"extras", tag(fresh("view", next))}});
  d["accessors"].push_back({{"bufferView", accessors}, {"componentType", 5121}, {"count", 4096}, {"type", "SCALAR"},
                            {"extensions", {{"MPEG_timed_accessors", Json::object()}}}, {"extras", tag(fresh("accessor", next))}});
  d["textures"] = Json::array({{{"extensions", {{"MPEG_video_texture", {{"accessor", accessors}}}}}, {"extras", tag(fresh("texture", next))}}});

  const std::size_t materials = pick<std::size_t>(rng, 2, 3);
  d["materials"] = Json::array();
  for (std::size_t i = 0; i < materials; ++i) {
    Json m = {{"extras", tag(fresh("material", next))}};
    if (i == 0) m["pbrMetallicRoughness"] = {{"baseColorTexture", {{"index", 0}}}};
    d["materials"].push_back(m);
  }

  const std::size_t meshes = pick<std::size_t>(rng, 2, 4);
  d["meshes"] = Json::array();
  for (std::size_t i = 0; i < meshes; ++i) {
    d["meshes"].push_back({{"primitives", Json::array({{{"attributes", {{"POSITION", pick<std::size_t>(rng, 0, accessors - 1)}}},
                                                        {"material", pick<std::size_t>(rng, 0, materials - 1)}}})},
                           {"extras", tag(fresh("mesh", next))}});
  }

  const std::size_t nodes = pick<std::size_t>(rng, 5, 8);
  d["nodes"] = Json::array();
  Json roots = Json::array();
  for (std::size_t i = 0; i < nodes; ++i) {
    Json n = {{"extras", tag(fresh("node", next))}};
    if (coin(rng, 0.5)) n["mesh"] = pick<std::size_t>(rng, 0, meshes - 1);
    if (coin(rng, 0.5)) n["translation"] = {pick<int>(rng, -3, 3), pick<int>(rng, -3, 3), 0};
    d["nodes"].push_back(n);
    if (i > 0 && coin(rng, 0.7)) {
      Json& parent = d["nodes"][pick<std::size_t>(rng, 0, i - 1)];
      parent["children"].push_back(i);
    } else {
      roots.push_back(i);
    }
  }
  d["scenes"] = Json::array({{{"nodes", roots}, {"extras", tag(fresh("scene", next))}}});
  d["scene"] = 0;
  return d;
}

GeneratedTransaction random_transaction(const Json& doc, std::mt19937_64& rng, double failure_rate,
                                        std::uint64_t& next_tag) {
  GeneratedTransaction out;
  Json work = doc;
  const int actions = pick<int>(rng, 1, 3);
  for (int a = 0; a < actions; ++a) {
    std::vector<PatchOperation> ops;
    const std::size_t nodes = size_of(work, "nodes");
    const std::size_t meshes = size_of(work, "meshes");
    const std::size_t materials = size_of(work, "materials");
    switch (pick<int>(rng, 0, 8)) {
      case 0: {  // add a node, optionally as the last child of another
        const std::size_t q = pick<std::size_t>(rng, 0, nodes);
        Json n = {{"extras", tag(fresh("node", next_tag))}};
        if (meshes > 0 && coin(rng, 0.5)) n["mesh"] = pick<std::size_t>(rng, 0, meshes - 1);
        ops.push_back(op(PatchOp::Add, coin(rng, 0.3) ? "/nodes/-" : at("nodes", q), n));
        const std::size_t placed = ops.back().path == "/nodes/-" ? nodes : q;
        if (nodes > 0 && coin(rng, 0.6)) {
          std::size_t p = pick<std::size_t>(rng, 0, nodes);
          if (p == placed) p = (p + 1) % (nodes + 1);
          const std::size_t old_p = p < placed ? p : p - 1;
          if (work["nodes"][old_p].contains("children")) {
            ops.push_back(op(PatchOp::Add, at("nodes", p) + "/children/-", placed));
          } else {
            ops.push_back(op(PatchOp::Add, at("nodes", p) + "/children", Json::array({placed})));
          }
        } else {
          ops.push_back(op(PatchOp::Add, "/scenes/0/nodes/-", placed));
        }
        break;
      }
      case 1:  // remove a node along with every reference to it
        if (nodes > 1) ops = remove_node_cleanly(work, pick<std::size_t>(rng, 0, nodes - 1));
        break;
      case 2:  // reorder nodes
        if (nodes > 1) {
          ops.push_back(op(PatchOp::Move, at("nodes", pick<std::size_t>(rng, 0, nodes - 1)), std::nullopt,
                           at("nodes", pick<std::size_t>(rng, 0, nodes - 1))));
        }
        break;
      case 3:  // retranslate a node
        if (nodes > 0) {
          ops.push_back(op(PatchOp::Add, at("nodes", pick<std::size_t>(rng, 0, nodes - 1)) + "/translation",
                           Json::array({pick<int>(rng, -5, 5), pick<int>(rng, -5, 5), pick<int>(rng, -5, 5)})));
        }
        break;
      case 4: {  // insert a mesh somewhere in the array
        const std::size_t accessors = size_of(work, "accessors");
        Json m = {{"primitives", Json::array({{{"attributes", {{"POSITION", pick<std::size_t>(rng, 0, accessors - 2)}}}}})},
                  {"extras", tag(fresh("mesh", next_tag))}};
        if (materials > 0) m["primitives"][0]["material"] = pick<std::size_t>(rng, 0, materials - 1);
        ops.push_back(op(PatchOp::Add, at("meshes", pick<std::size_t>(rng, 0, meshes)), m));
        break;
      }
      case 5:  // drop a mesh after detaching it from its nodes
        if (meshes > 1) {
          const std::size_t m = pick<std::size_t>(rng, 0, meshes - 1);
          for (std::size_t i = 0; i < nodes; ++i) {
            if (work["nodes"][i].value("mesh", -1) == static_cast<int>(m)) ops.push_back(op(PatchOp::Remove, at("nodes", i) + "/mesh"));
          }
          ops.push_back(op(PatchOp::Remove, at("meshes", m)));
        }
        break;
      case 6:  // reorder meshes
        if (meshes > 1) {
          ops.push_back(op(PatchOp::Move, at("meshes", pick<std::size_t>(rng, 0, meshes - 1)), std::nullopt,
                           at("meshes", pick<std::size_t>(rng, 0, meshes - 1))));
        }
        break;
      case 7: {  // duplicate a node under a new tag
        if (nodes == 0) break;
        const std::size_t j = pick<std::size_t>(rng, 0, nodes);
        ops.push_back(op(PatchOp::Copy, at("nodes", j), std::nullopt, at("nodes", pick<std::size_t>(rng, 0, nodes - 1))));
        ops.push_back(op(PatchOp::Replace, at("nodes", j) + "/extras/tag", fresh("node", next_tag)));
        break;
      }
      case 8:  // reorder materials
        if (materials > 1) {
          ops.push_back(op(PatchOp::Move, at("materials", pick<std::size_t>(rng, 0, materials - 1)), std::nullopt,
                           at("materials", pick<std::size_t>(rng, 0, materials - 1))));
        }
        break;
    }
    if (ops.empty()) continue;
    try {
      work = apply_transaction(work, PatchTransaction{0, ops});
    } catch (const TransactionFailed&) {
      continue;  // e.g. a copy that would create a cycle; drop the action
    }
    out.txn.operations.insert(out.txn.operations.end(), ops.begin(), ops.end());
  }

  if (!coin(rng, failure_rate)) return out;
  out.injected_failure = true;
  auto& list = out.txn.operations;
  auto insert_anywhere = [&](PatchOperation o) {
    list.insert(list.begin() + static_cast<std::ptrdiff_t>(pick<std::size_t>(rng, 0, list.size())), std::move(o));
  };
  const std::size_t nodes = size_of(work, "nodes");
  switch (pick<int>(rng, 0, 4)) {
    case 0:
      insert_anywhere(op(PatchOp::Test, "/asset/version", Json("1.0")));
      break;
    case 1:
      insert_anywhere(op(PatchOp::Remove, "/nodes/9999"));
      break;
    case 2:
      list.push_back(op(PatchOp::Add, at("nodes", pick<std::size_t>(rng, 0, nodes - 1)) + "/mesh", 999));
      break;
    case 3: {
      // Remove a node something still points at.
      std::optional<std::size_t> victim;
      for (std::size_t i = 0; i < nodes && !victim; ++i) {
        if (node_referenced(work, i)) victim = i;
      }
      if (victim) {
        list.push_back(op(PatchOp::Remove, at("nodes", *victim)));
      } else {
        list.push_back(op(PatchOp::Add, "/scenes/0/nodes/-", 999));
      }
      break;
    }
    default:
      // Move into its own child.
      insert_anywhere(op(PatchOp::Move, "/materials/0", std::nullopt, "/materials"));
      break;
  }
  return out;
}

namespace {

std::optional<std::string> tag_at(const Json& doc, const std::vector<std::string>& tokens) {
  const Json* e = resolve_pointer(doc, tokens);
  if (!e || !e->is_object()) return std::nullopt;
  auto x = e->find("extras");
  if (x == e->end() || !x->is_object() || !x->contains("tag")) return std::nullopt;
  return (*x)["tag"].get<std::string>();
}

std::set<std::string> all_tags(const Json& doc) {
  std::set<std::string> tags;
  for (const TrackedArray& a : tracked_arrays()) {
    const Json* arr = resolve_pointer(doc, a.location);
    if (!arr || !arr->is_array()) continue;
    for (const Json& e : *arr) {
      if (e.is_object() && e.contains("extras") && e["extras"].contains("tag")) tags.insert(e["extras"]["tag"].get<std::string>());
    }
  }
  return tags;
}

}  // namespace

ReferenceIdentity reference_identity(const Json& doc) {
  ReferenceIdentity out;
  std::map<std::string, const TrackedArray*> by_name;
  for (const TrackedArray& a : tracked_arrays()) by_name[a.name] = &a;
  for (const ReferenceSite& site : collect_references(doc)) {
    for (const TrackedArray& a : tracked_arrays()) {
      const auto& loc = a.location;
      if (site.tokens.size() <= loc.size() || !std::equal(loc.begin(), loc.end(), site.tokens.begin())) continue;
      std::vector<std::string> holder(site.tokens.begin(), site.tokens.begin() + static_cast<std::ptrdiff_t>(loc.size() + 1));
      const auto holder_tag = tag_at(doc, holder);
      if (!holder_tag) break;
      std::string field = a.name;
      for (std::size_t i = loc.size() + 1; i < site.tokens.size(); ++i) {
        field += "/" + (parse_array_index(site.tokens[i]) ? std::string("*") : site.tokens[i]);
      }
      std::vector<std::string> target = by_name.at(site.target)->location;
      target.push_back(std::to_string(site.value));
      out[*holder_tag][field].push_back(tag_at(doc, target).value_or("<missing>"));
      break;
    }
  }
  return out;
}

std::size_t retargeted_references(const Json& before_doc, const Json& after_doc) {
  const ReferenceIdentity before = reference_identity(before_doc);
  const ReferenceIdentity after = reference_identity(after_doc);
  const std::set<std::string> alive = all_tags(after_doc);
  std::size_t bad = 0;
  for (const auto& [holder, fields] : after) {
    for (const auto& [field, targets] : fields) {
      bad += static_cast<std::size_t>(std::count(targets.begin(), targets.end(), "<missing>"));
    }
  }
  for (const auto& [holder, fields] : before) {
    if (!alive.contains(holder)) continue;
    auto now = after.find(holder);
    for (const auto& [field, targets] : fields) {
      std::vector<std::string> expected;
      for (const auto& t : targets) {
        if (alive.contains(t)) expected.push_back(t);
      }
      std::vector<std::string> got;
      if (now != after.end()) {
        if (auto f = now->second.find(field); f != now->second.end()) got = f->second;
      }
      // Edits may append references to a holder, never rewrite existing ones.
      if (got.size() < expected.size()) {
        bad += expected.size() - got.size();
        got.resize(expected.size());
      }
      for (std::size_t i = 0; i < expected.size(); ++i) bad += got[i] != expected[i];
    }
  }
  return bad;
}

// ---------------------------------------------------------------- CLI

CommandResult run_cli(const std::string& args) {
  const std::string cmd = "'" + cli_path().string() + "' " + args + " 2>/dev/null";
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace xrpipe::testing
