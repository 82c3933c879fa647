#include "xrpipe/json_patch.hpp"

#include <algorithm>

namespace xrpipe {

std::string_view to_string(PatchOp op) noexcept {
  switch (op) {
    case PatchOp::Add: return "add";
    case PatchOp::Remove: return "remove";
    case PatchOp::Replace: return "replace";
    case PatchOp::Move: return "move";
    case PatchOp::Copy: return "copy";
    case PatchOp::Test: return "test";
  }
  return "unknown";
}

std::string_view to_string(FailureReason reason) noexcept {
  switch (reason) {
    case FailureReason::TestFailed: return "TestFailed";
    case FailureReason::PathNotFound: return "PathNotFound";
    case FailureReason::InvalidValue: return "InvalidValue";
    case FailureReason::ResultInvalid: return "ResultInvalid";
  }
  return "Unknown";
}

TransactionFailed::TransactionFailed(std::size_t op_index, FailureReason reason, const std::string& detail)
    : Error(ErrorCode::TransactionFailed,
            "op " + std::to_string(op_index) + " " + std::string(to_string(reason)) + ": " + detail),
      op_index_(op_index),
      reason_(reason),
      detail_(detail) {}

namespace {

[[noreturn]] void fail(std::size_t index, FailureReason reason, const std::string& detail) {
  throw TransactionFailed(index, reason, detail);
}

std::vector<std::string> tokens_or_fail(std::string_view pointer, std::size_t index) {
  try {
    return parse_pointer(pointer);
  } catch (const TransactionFailed& e) {
    fail(index, FailureReason::InvalidValue, e.detail());
  }
}

}  // namespace

std::vector<std::string> parse_pointer(std::string_view pointer) {
  std::vector<std::string> tokens;
  if (pointer.empty()) return tokens;
  if (pointer.front() != '/') fail(0, FailureReason::InvalidValue, "pointer '" + std::string(pointer) + "' must start with '/'");
  std::string current;
  for (std::size_t i = 1; i <= pointer.size(); ++i) {
    if (i == pointer.size() || pointer[i] == '/') {
      tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (pointer[i] == '~') {
      if (i + 1 >= pointer.size() || (pointer[i + 1] != '0' && pointer[i + 1] != '1')) {
        fail(0, FailureReason::InvalidValue, "bad escape in pointer '" + std::string(pointer) + "'");
      }
      current += pointer[i + 1] == '0' ? '~' : '/';
      ++i;
      continue;
    }
    current += pointer[i];
  }
  return tokens;
}

std::string make_pointer(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    out += '/';
    for (char c : t) {
      if (c == '~') {
        out += "~0";
      } else if (c == '/') {
        out += "~1";
      } else {
        out += c;
      }
    }
  }
  return out;
}

std::optional<std::size_t> parse_array_index(std::string_view token) {
  if (token.empty() || token.size() > 18) return std::nullopt;
  if (token.size() > 1 && token.front() == '0') return std::nullopt;
  std::size_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

const Json* resolve_pointer(const Json& doc, const std::vector<std::string>& tokens) {
  const Json* cur = &doc;
  for (const std::string& t : tokens) {
    if (cur->is_object()) {
      auto it = cur->find(t);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array()) {
      auto idx = parse_array_index(t);
      if (!idx || *idx >= cur->size()) return nullptr;
      cur = &(*cur)[*idx];
    } else {
      return nullptr;
    }
  }
  return cur;
}

Json* resolve_pointer(Json& doc, const std::vector<std::string>& tokens) {
  return const_cast<Json*>(resolve_pointer(static_cast<const Json&>(doc), tokens));
}

PatchOperation parse_operation(const Json& j, std::size_t index) {
  if (!j.is_object()) fail(index, FailureReason::InvalidValue, "operation is not an object");
  PatchOperation op;
  auto name = j.find("op");
  if (name == j.end() || !name->is_string()) fail(index, FailureReason::InvalidValue, "missing 'op'");
  const std::string& s = name->get_ref<const std::string&>();
  if (s == "add") {
    op.op = PatchOp::Add;
  } else if (s == "remove") {
    op.op = PatchOp::Remove;
  } else if (s == "replace") {
    op.op = PatchOp::Replace;
  } else if (s == "move") {
    op.op = PatchOp::Move;
  } else if (s == "copy") {
    op.op = PatchOp::Copy;
  } else if (s == "test") {
    op.op = PatchOp::Test;
  } else {
    fail(index, FailureReason::InvalidValue, "unknown op '" + s + "'");
  }
  auto path = j.find("path");
  if (path == j.end() || !path->is_string()) fail(index, FailureReason::InvalidValue, "missing 'path'");
  op.path = path->get<std::string>();
  if (op.op == PatchOp::Move || op.op == PatchOp::Copy) {
    auto from = j.find("from");
    if (from == j.end() || !from->is_string()) fail(index, FailureReason::InvalidValue, "missing 'from'");
    op.from = from->get<std::string>();
  }
  if (op.op == PatchOp::Add || op.op == PatchOp::Replace || op.op == PatchOp::Test) {
    auto value = j.find("value");
    if (value == j.end()) fail(index, FailureReason::InvalidValue, "missing 'value'");
    op.value = *value;
  }
  return op;
}

std::vector<PatchOperation> parse_patch(const Json& patch) {
  if (!patch.is_array()) fail(0, FailureReason::InvalidValue, "patch is not an array");
  std::vector<PatchOperation> ops;
  for (std::size_t i = 0; i < patch.size(); ++i) ops.push_back(parse_operation(patch[i], i));
  return ops;
}

Json operation_to_json(const PatchOperation& op) {
  Json j = {{"op", std::string(to_string(op.op))}, {"path", op.path}};
  if (op.from) j["from"] = *op.from;
  if (op.value) j["value"] = *op.value;
  return j;
}

namespace {

void add_at(Json& doc, const std::vector<std::string>& tokens, Json value, std::size_t index) {
  if (tokens.empty()) {
    doc = std::move(value);
    return;
  }
  const std::vector<std::string> parent_tokens(tokens.begin(), tokens.end() - 1);
  Json* parent = resolve_pointer(doc, parent_tokens);
  if (!parent) fail(index, FailureReason::PathNotFound, "parent of " + make_pointer(tokens) + " does not exist");
  const std::string& last = tokens.back();
  if (parent->is_object()) {
    (*parent)[last] = std::move(value);
  } else if (parent->is_array()) {
    if (last == "-") {
      parent->push_back(std::move(value));
      return;
    }
    auto idx = parse_array_index(last);
    if (!idx || *idx > parent->size()) {
      fail(index, FailureReason::PathNotFound, "array index '" + last + "' out of range");
    }
    parent->insert(parent->begin() + static_cast<std::ptrdiff_t>(*idx), std::move(value));
  } else {
    fail(index, FailureReason::PathNotFound, "parent of " + make_pointer(tokens) + " is not a container");
  }
}

void remove_at(Json& doc, const std::vector<std::string>& tokens, std::size_t index) {
  if (tokens.empty()) fail(index, FailureReason::InvalidValue, "cannot remove the document root");
  const std::vector<std::string> parent_tokens(tokens.begin(), tokens.end() - 1);
  Json* parent = resolve_pointer(doc, parent_tokens);
  const std::string& last = tokens.back();
  if (parent && parent->is_object()) {
    if (parent->erase(last) == 1) return;
  } else if (parent && parent->is_array()) {
    auto idx = parse_array_index(last);
    if (idx && *idx < parent->size()) {
      parent->erase(*idx);
      return;
    }
  }
  fail(index, FailureReason::PathNotFound, make_pointer(tokens) + " does not exist");
}

const Json& get_at(const Json& doc, const std::vector<std::string>& tokens, std::size_t index) {
  const Json* v = resolve_pointer(doc, tokens);
  if (!v) fail(index, FailureReason::PathNotFound, make_pointer(tokens) + " does not exist");
  return *v;
}

bool is_proper_prefix(const std::vector<std::string>& prefix, const std::vector<std::string>& of) {
  return prefix.size() < of.size() && std::equal(prefix.begin(), prefix.end(), of.begin());
}

}  // namespace

void apply_operation(Json& doc, const PatchOperation& op, std::size_t index) {
  const auto path = tokens_or_fail(op.path, index);
  switch (op.op) {
    case PatchOp::Add:
      add_at(doc, path, *op.value, index);
      return;
    case PatchOp::Remove:
      remove_at(doc, path, index);
      return;
    case PatchOp::Replace: {
      Json* target = resolve_pointer(doc, path);
      if (!target) fail(index, FailureReason::PathNotFound, op.path + " does not exist");
      *target = *op.value;
      return;
    }
    case PatchOp::Move: {
      const auto from = tokens_or_fail(*op.from, index);
      if (from == path) {
        get_at(doc, from, index);
        return;
      }
      if (is_proper_prefix(from, path)) fail(index, FailureReason::InvalidValue, "cannot move a value into itself");
      Json value = get_at(doc, from, index);
      // Work on a copy so a failing add cannot leave the source removed.
      Json next = doc;
      remove_at(next, from, index);
      add_at(next, path, std::move(value), index);
      doc = std::move(next);
      return;
    }
    case PatchOp::Copy: {
      const auto from = tokens_or_fail(*op.from, index);
      Json value = get_at(doc, from, index);
      add_at(doc, path, std::move(value), index);
      return;
    }
    case PatchOp::Test: {
      const Json& actual = get_at(doc, path, index);
      if (actual != *op.value) {
        fail(index, FailureReason::TestFailed, op.path + " is " + actual.dump() + ", expected " + op.value->dump());
      }
      return;
    }
  }
}

Json apply_patch(const Json& doc, const std::vector<PatchOperation>& ops) {
  Json out = doc;
  for (std::size_t i = 0; i < ops.size(); ++i) apply_operation(out, ops[i], i);
  return out;
}

Json apply_patch(const Json& doc, const Json& patch) {
  if (!patch.is_array()) fail(0, FailureReason::InvalidValue, "patch is not an array");
  Json out = doc;
  for (std::size_t i = 0; i < patch.size(); ++i) apply_operation(out, parse_operation(patch[i], i), i);
  return out;
}

}  // namespace xrpipe
