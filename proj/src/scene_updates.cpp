#include "xrpipe/scene_updates.hpp"

#include <algorithm>
#include <functional>

namespace xrpipe {

PatchTransaction parse_transaction(const Json& j) {
  PatchTransaction txn;
  if (j.is_array()) {
    txn.operations = parse_patch(j);
    return txn;
  }
  if (!j.is_object() || !j.contains("patch")) {
    throw TransactionFailed(0, FailureReason::InvalidValue, "expected a patch array or {activation_time, patch}");
  }
  if (auto t = j.find("activation_time"); t != j.end()) {
    if (!t->is_number_integer()) throw TransactionFailed(0, FailureReason::InvalidValue, "activation_time must be an integer");
    txn.activation_time = t->get<Ticks>();
  }
  txn.operations = parse_patch(j.at("patch"));
  return txn;
}

std::vector<PatchTransaction> parse_transactions(const Json& j) {
  if (j.is_array() && !j.empty() && j.front().is_object() && j.front().contains("patch")) {
    std::vector<PatchTransaction> out;
    for (const Json& e : j) out.push_back(parse_transaction(e));
    return out;
  }
  return {parse_transaction(j)};
}

Json transaction_to_json(const PatchTransaction& txn) {
  Json patch = Json::array();
  for (const PatchOperation& op : txn.operations) patch.push_back(operation_to_json(op));
  return {{"activation_time", txn.activation_time}, {"patch", std::move(patch)}};
}

const std::vector<TrackedArray>& tracked_arrays() {
  static const std::vector<TrackedArray> arrays = {
      {"scenes", {"scenes"}},
      {"nodes", {"nodes"}},
      {"meshes", {"meshes"}},
      {"accessors", {"accessors"}},
      {"bufferViews", {"bufferViews"}},
      {"buffers", {"buffers"}},
      {"textures", {"textures"}},
      {"images", {"images"}},
      {"materials", {"materials"}},
      {"cameras", {"cameras"}},
      {"media", {"extensions", "MPEG_media", "media"}},
      {"audioNodes", {"extensions", "MPEG_spatial_audio", "audioNodes"}},
  };
  return arrays;
}

const std::vector<ReferencePattern>& reference_map() {
  static const std::vector<ReferencePattern> map = {
      {"/scene", "scenes"},
      {"/scenes/*/nodes/*", "nodes"},
      {"/nodes/*/children/*", "nodes"},
      {"/nodes/*/mesh", "meshes"},
      {"/nodes/*/camera", "cameras"},
      {"/meshes/*/primitives/*/attributes/*", "accessors"},
      {"/meshes/*/primitives/*/indices", "accessors"},
      {"/meshes/*/primitives/*/material", "materials"},
      {"/accessors/*/bufferView", "bufferViews"},
      {"/bufferViews/*/buffer", "buffers"},
      {"/buffers/*/extensions/MPEG_circular_buffer/media", "media"},
      {"/textures/*/source", "images"},
      {"/textures/*/extensions/MPEG_video_texture/accessor", "accessors"},
      {"/materials/*/pbrMetallicRoughness/baseColorTexture/index", "textures"},
      {"/extensions/MPEG_spatial_audio/audioNodes/*/accessor", "accessors"},
      {"/extensions/MPEG_spatial_audio/audioNodes/*/node", "nodes"},
      {"/extensions/MPEG_spatial_audio/audioNodes/*/inputs/*", "audioNodes"},
  };
  return map;
}

namespace {

void walk(const Json& node, const std::vector<std::string>& pattern, std::size_t depth, std::vector<std::string>& path,
          const std::string& target, std::vector<ReferenceSite>& out) {
  if (depth == pattern.size()) {
    if (node.is_number_integer()) out.push_back({path, target, node.get<std::int64_t>()});
    return;
  }
  const std::string& token = pattern[depth];
  if (token == "*") {
    if (node.is_array()) {
      for (std::size_t i = 0; i < node.size(); ++i) {
        path.push_back(std::to_string(i));
        walk(node[i], pattern, depth + 1, path, target, out);
        path.pop_back();
      }
    } else if (node.is_object()) {
      for (auto it = node.begin(); it != node.end(); ++it) {
        path.push_back(it.key());
        walk(*it, pattern, depth + 1, path, target, out);
        path.pop_back();
      }
    }
    return;
  }
  if (!node.is_object()) return;
  auto it = node.find(token);
  if (it == node.end()) return;
  path.push_back(token);
  walk(*it, pattern, depth + 1, path, target, out);
  path.pop_back();
}

const TrackedArray* find_array(std::string_view name) {
  for (const TrackedArray& a : tracked_arrays()) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::size_t array_size(const Json& doc, const TrackedArray& a) {
  const Json* arr = resolve_pointer(doc, a.location);
  return arr && arr->is_array() ? arr->size() : 0;
}

bool starts_with(const std::vector<std::string>& tokens, const std::vector<std::string>& prefix) {
  return tokens.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), tokens.begin());
}

struct Dangling {
  std::string pointer;
  std::int64_t value;
};

// Rewrites every reference into `array` through `map`; nullopt from the map
// means the reference would dangle. Sites under `exclude` are left alone.
void remap(Json& doc, const std::string& array, const std::function<std::optional<std::int64_t>(std::int64_t)>& map,
           const std::optional<std::vector<std::string>>& exclude = std::nullopt) {
  for (const ReferenceSite& site : collect_references(doc)) {
    if (site.target != array) continue;
    if (exclude && starts_with(site.tokens, *exclude)) continue;
    auto mapped = map(site.value);
    if (!mapped) throw Dangling{site.pointer(), site.value};
    if (*mapped != site.value) *resolve_pointer(doc, site.tokens) = *mapped;
  }
}

std::function<std::optional<std::int64_t>(std::int64_t)> removal_map(std::int64_t removed, std::int64_t old_size) {
  return [=](std::int64_t v) -> std::optional<std::int64_t> {
    if (v == removed) return std::nullopt;
    if (v > removed && v < old_size) return v - 1;
    return v;
  };
}

std::function<std::optional<std::int64_t>(std::int64_t)> insertion_map(std::int64_t at, std::int64_t old_size) {
  return [=](std::int64_t v) -> std::optional<std::int64_t> {
    if (v >= at && v < old_size) return v + 1;
    return v;
  };
}

std::function<std::optional<std::int64_t>(std::int64_t)> move_map(std::int64_t from, std::int64_t to,
                                                                  std::int64_t size) {
  return [=](std::int64_t v) -> std::optional<std::int64_t> {
    if (v < 0 || v >= size) return v;
    if (v == from) return to;
    std::int64_t k = v > from ? v - 1 : v;
    return k >= to ? k + 1 : k;
  };
}

// The tracked array a pointer addresses an element of, and the element token.
struct ElementRef {
  const TrackedArray* array = nullptr;
  std::string token;
};

std::optional<ElementRef> tracked_element(const std::vector<std::string>& tokens) {
  if (tokens.empty()) return std::nullopt;
  for (const TrackedArray& a : tracked_arrays()) {
    if (tokens.size() == a.location.size() + 1 && starts_with(tokens, a.location)) return ElementRef{&a, tokens.back()};
  }
  return std::nullopt;
}

std::vector<std::string> element_tokens(const TrackedArray& a, std::size_t index) {
  std::vector<std::string> t = a.location;
  t.push_back(std::to_string(index));
  return t;
}

[[noreturn]] void dangling_failure(std::size_t op, const Dangling& d) {
  throw TransactionFailed(op, FailureReason::ResultInvalid,
                          "DanglingAfterRemove: " + d.pointer + " still references removed element " +
                              std::to_string(d.value));
}

// Remove phase of remove/move: refuse if anything outside the element still
// points at it, otherwise close the gap.
void prepare_removal(Json& doc, const ElementRef& e, std::size_t op) {
  const auto idx = parse_array_index(e.token);
  const std::size_t size = array_size(doc, *e.array);
  if (!idx || *idx >= size) return;  // the raw op reports PathNotFound
  try {
    remap(doc, e.array->name, removal_map(static_cast<std::int64_t>(*idx), static_cast<std::int64_t>(size)),
          element_tokens(*e.array, *idx));
  } catch (const Dangling& d) {
    dangling_failure(op, d);
  }
}

// Insert phase, run after the raw edit placed the new element at `index`.
void finish_insertion(Json& doc, const TrackedArray& a, std::size_t index, std::size_t old_size, bool literal) {
  if (index >= old_size) return;
  std::optional<std::vector<std::string>> exclude;
  if (literal) exclude = element_tokens(a, index);
  remap(doc, a.name, insertion_map(static_cast<std::int64_t>(index), static_cast<std::int64_t>(old_size)), exclude);
}

void apply_structural(Json& doc, const PatchOperation& op, std::size_t i) {
  auto tokens = [i](const std::string& pointer) {
    try {
      return parse_pointer(pointer);
    } catch (const TransactionFailed& e) {
      throw TransactionFailed(i, FailureReason::InvalidValue, e.detail());
    }
  };
  const std::vector<std::string> path = tokens(op.path);
  const auto target = tracked_element(path);

  switch (op.op) {
    case PatchOp::Add:
    case PatchOp::Copy: {
      std::size_t old_size = target ? array_size(doc, *target->array) : 0;
      apply_operation(doc, op, i);
      if (!target) return;
      if (auto idx = parse_array_index(target->token)) {
        finish_insertion(doc, *target->array, *idx, old_size, op.op == PatchOp::Add);
      }
      return;
    }
    case PatchOp::Remove:
      if (target) prepare_removal(doc, *target, i);
      apply_operation(doc, op, i);
      return;
    case PatchOp::Move: {
      const std::vector<std::string> from = tokens(*op.from);
      if (from == path) {
        apply_operation(doc, op, i);
        return;
      }
      const auto source = tracked_element(from);
      if (source && target && source->array == target->array) {
        const std::size_t size = array_size(doc, *source->array);
        const auto f = parse_array_index(source->token);
        std::optional<std::size_t> t =
            target->token == "-" ? (size ? std::optional<std::size_t>(size - 1) : std::nullopt) : parse_array_index(target->token);
        if (f && t && *f < size && *t < size) {
          Json next = doc;
          apply_operation(next, op, i);
          remap(next, source->array->name,
                move_map(static_cast<std::int64_t>(*f), static_cast<std::int64_t>(*t), static_cast<std::int64_t>(size)));
          doc = std::move(next);
          return;
        }
        apply_operation(doc, op, i);  // fails with the RFC error
        return;
      }
      Json next = doc;
      if (source) prepare_removal(next, *source, i);
      const std::size_t old_size = target ? array_size(next, *target->array) : 0;
      apply_operation(next, op, i);
      if (target) {
        if (auto idx = parse_array_index(target->token)) finish_insertion(next, *target->array, *idx, old_size, false);
      }
      doc = std::move(next);
      return;
    }
    case PatchOp::Replace:
    case PatchOp::Test:
      apply_operation(doc, op, i);
      return;
  }
}

}  // namespace

std::vector<ReferenceSite> collect_references(const Json& doc) {
  std::vector<ReferenceSite> out;
  for (const ReferencePattern& p : reference_map()) {
    std::vector<std::string> path;
    walk(doc, parse_pointer(p.pattern), 0, path, p.target, out);
  }
  return out;
}

Json reindex_references(const Json& doc, std::string_view array, const IndexChange& change) {
  const TrackedArray* a = find_array(array);
  if (!a) throw Error(ErrorCode::InvariantViolation, "'" + std::string(array) + "' is not a tracked array");
  const auto size = static_cast<std::int64_t>(array_size(doc, *a));
  Json out = doc;
  try {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, IndexRemoved>) {
            remap(out, a->name, removal_map(static_cast<std::int64_t>(c.index), size + 1));
          } else if constexpr (std::is_same_v<T, IndexInserted>) {
            remap(out, a->name, insertion_map(static_cast<std::int64_t>(c.index), size - 1),
                  element_tokens(*a, c.index));
          } else {
            remap(out, a->name,
                  move_map(static_cast<std::int64_t>(c.from), static_cast<std::int64_t>(c.to), size));
          }
        },
        change);
  } catch (const Dangling& d) {
    throw Error(ErrorCode::DanglingAfterRemove, d.pointer + " references removed element " + std::to_string(d.value));
  }
  return out;
}

Json apply_transaction(const Json& doc, const PatchTransaction& txn) {
  Json work = doc;
  for (std::size_t i = 0; i < txn.operations.size(); ++i) {
    try {
      apply_structural(work, txn.operations[i], i);
    } catch (const Dangling& d) {
      dangling_failure(i, d);
    }
  }
  if (txn.operations.empty()) return work;

  const std::size_t last = txn.operations.size() - 1;
  try {
    const auto violations = validate_scene(decode_scene(work));
    if (!violations.empty()) throw TransactionFailed(last, FailureReason::ResultInvalid, format_violation(violations.front()));
  } catch (const TransactionFailed&) {
    throw;
  } catch (const Error& e) {
    throw TransactionFailed(last, FailureReason::ResultInvalid, e.what());
  }
  return work;
}

std::string format_update_record(const UpdateRecord& r) {
  std::string line = "UPDATE t=" + std::to_string(r.activation_time) + " txn=" + std::to_string(r.transaction);
  if (r.applied) return line + " applied";
  line += " failed";
  if (r.error) line += " error=" + std::string(to_string(*r.error));
  if (r.failed_op) line += " op=" + std::to_string(*r.failed_op);
  if (r.reason) line += " reason=" + std::string(to_string(*r.reason));
  return line;
}

Json update_record_to_json(const UpdateRecord& r) {
  Json j = {{"transaction", r.transaction}, {"activation_time", r.activation_time}, {"applied", r.applied}};
  if (r.failed_op) j["failed_op"] = *r.failed_op;
  if (r.reason) j["reason"] = std::string(to_string(*r.reason));
  if (r.error) j["error"] = std::string(to_string(*r.error));
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

const Json& UpdateTimeline::state_at(Ticks t) const {
  auto it = std::upper_bound(states_.begin(), states_.end(), t,
                             [](Ticks value, const auto& entry) { return value < entry.first; });
  if (it == states_.begin()) return initial_;
  return std::prev(it)->second;
}

UpdateTimeline schedule_updates(const Json& initial, std::vector<PatchTransaction> txns, UpdateFailurePolicy policy) {
  UpdateTimeline timeline;
  timeline.initial_ = initial;
  for (std::size_t i = 0; i < txns.size(); ++i) timeline.sorted_.push_back({i, std::move(txns[i])});
  std::stable_sort(timeline.sorted_.begin(), timeline.sorted_.end(),
                   [](const auto& a, const auto& b) { return a.txn.activation_time < b.txn.activation_time; });

  timeline.states_.reserve(timeline.sorted_.size());
  const Json* current = &timeline.initial_;
  for (const ScheduledTransaction& s : timeline.sorted_) {
    UpdateRecord record;
    record.transaction = s.source_index;
    record.activation_time = s.txn.activation_time;
    try {
      Json next = apply_transaction(*current, s.txn);
      record.applied = true;
      timeline.states_.emplace_back(s.txn.activation_time, std::move(next));
      current = &timeline.states_.back().second;
    } catch (const TransactionFailed& e) {
      record.error = ErrorCode::TransactionFailed;
      record.failed_op = e.op_index();
      record.reason = e.reason();
      record.detail = e.detail();
    }
    const bool halt = !record.applied && policy == UpdateFailurePolicy::Halt;
    timeline.log_.push_back(std::move(record));
    if (halt) break;
  }
  return timeline;
}

}  // namespace xrpipe
