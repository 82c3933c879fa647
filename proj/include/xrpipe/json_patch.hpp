#pragma once

// JSON Patch (RFC 6902) over nlohmann::json. Pointers are parsed here rather
// than through nlohmann::json_pointer so that array-index rules ("-", no
// leading zeros) and error classes match the RFC exactly.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xrpipe/error.hpp"

namespace xrpipe {

using Json = nlohmann::json;

enum class PatchOp { Add, Remove, Replace, Move, Copy, Test };
std::string_view to_string(PatchOp op) noexcept;

struct PatchOperation {
  PatchOp op = PatchOp::Add;
  std::string path;
  std::optional<std::string> from;  // move, copy
  std::optional<Json> value;        // add, replace, test
  bool operator==(const PatchOperation&) const = default;
};

enum class FailureReason { TestFailed, PathNotFound, InvalidValue, ResultInvalid };
std::string_view to_string(FailureReason reason) noexcept;

/// Raised for any failed patch or transaction. The document the caller holds
/// is never modified when this is thrown.
class TransactionFailed : public Error {
 public:
  TransactionFailed(std::size_t op_index, FailureReason reason, const std::string& detail);

  std::size_t op_index() const noexcept { return op_index_; }
  FailureReason reason() const noexcept { return reason_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t op_index_;
  FailureReason reason_;
  std::string detail_;
};

/// Splits and unescapes a JSON pointer. Throws InvalidValue (op index 0).
std::vector<std::string> parse_pointer(std::string_view pointer);
std::string make_pointer(const std::vector<std::string>& tokens);

/// Strict array index: decimal digits, no leading zero. nullopt otherwise.
std::optional<std::size_t> parse_array_index(std::string_view token);

PatchOperation parse_operation(const Json& op, std::size_t index = 0);
std::vector<PatchOperation> parse_patch(const Json& patch);
Json operation_to_json(const PatchOperation& op);

/// Applies one operation in place. On throw, `doc` is unchanged.
void apply_operation(Json& doc, const PatchOperation& op, std::size_t index = 0);

/// All-or-nothing application of a whole patch; returns the post-image.
Json apply_patch(const Json& doc, const std::vector<PatchOperation>& ops);
Json apply_patch(const Json& doc, const Json& patch);

/// nullptr when the pointer does not resolve.
const Json* resolve_pointer(const Json& doc, const std::vector<std::string>& tokens);
Json* resolve_pointer(Json& doc, const std::vector<std::string>& tokens);

}  // namespace xrpipe
