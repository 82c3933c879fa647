#pragma once

// Timed, atomic scene updates. A transaction is a JSON Patch applied to the
// scene document as a whole; index references into the tracked arrays are
// repaired after every structural edit and the result must re-validate.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xrpipe/json_patch.hpp"
#include "xrpipe/scene_description.hpp"
#include "xrpipe/toy_stream.hpp"

namespace xrpipe {

struct PatchTransaction {
  Ticks activation_time = 0;
  std::vector<PatchOperation> operations;
  bool operator==(const PatchTransaction&) const = default;
};

/// Accepts a bare patch array or an envelope {activation_time, patch}.
PatchTransaction parse_transaction(const Json& j);
/// Additionally accepts an array of envelopes.
std::vector<PatchTransaction> parse_transactions(const Json& j);
Json transaction_to_json(const PatchTransaction& txn);

/// An array whose element order is used for referencing.
struct TrackedArray {
  std::string name;                   // e.g. "nodes", "media"
  std::vector<std::string> location;  // pointer tokens of the array itself
};
const std::vector<TrackedArray>& tracked_arrays();

/// Pointer pattern ("*" matches any array index or object key) of a field
/// holding an index into `target`.
struct ReferencePattern {
  std::string pattern;
  std::string target;
};
const std::vector<ReferencePattern>& reference_map();

struct ReferenceSite {
  std::vector<std::string> tokens;
  std::string target;
  std::int64_t value = 0;
  std::string pointer() const { return make_pointer(tokens); }
};

/// Every integer reference present in the document, in pattern order.
std::vector<ReferenceSite> collect_references(const Json& doc);

struct IndexRemoved {
  std::size_t index = 0;
};
struct IndexMoved {
  std::size_t from = 0;
  std::size_t to = 0;
};
struct IndexInserted {
  std::size_t index = 0;
};
using IndexChange = std::variant<IndexRemoved, IndexMoved, IndexInserted>;

/// `change` has already been applied to the named array; remaps every
/// reference into it. For an insertion the new element's own references are
/// taken as already correct. Throws DanglingAfterRemove when a reference
/// still names a removed element.
Json reindex_references(const Json& doc, std::string_view array, const IndexChange& change);

/// All operations succeed and the result validates, or TransactionFailed is
/// thrown. `doc` is never modified.
///
/// Values written by add/replace are taken literally (their indices refer to
/// the post-edit arrays). Values moved or copied out of the document are
/// remapped along with the rest of it.
Json apply_transaction(const Json& doc, const PatchTransaction& txn);

/// What happens to later transactions once one fails. Halt logs the failure
/// and drops everything scheduled after it.
enum class UpdateFailurePolicy { Skip, Halt };

struct UpdateRecord {
  std::size_t transaction = 0;  // position in the caller's list
  Ticks activation_time = 0;
  bool applied = false;
  std::optional<std::size_t> failed_op;
  std::optional<FailureReason> reason;
  std::optional<ErrorCode> error;  // TransactionFailed, or a pipeline-level code
  std::string detail;
};

/// `UPDATE t=<ticks> txn=<i> applied` or `... failed error=<E> op=<k> reason=<R>`.
std::string format_update_record(const UpdateRecord& record);
Json update_record_to_json(const UpdateRecord& record);

struct ScheduledTransaction {
  std::size_t source_index = 0;
  PatchTransaction txn;
};

class UpdateTimeline {
 public:
  /// Document state with every transaction of activation_time <= t applied.
  const Json& state_at(Ticks t) const;
  const Json& initial() const noexcept { return initial_; }
  /// Stable-sorted by activation time.
  const std::vector<ScheduledTransaction>& transactions() const noexcept { return sorted_; }
  const std::vector<UpdateRecord>& log() const noexcept { return log_; }

 private:
  friend UpdateTimeline schedule_updates(const Json& initial, std::vector<PatchTransaction> txns,
                                         UpdateFailurePolicy policy);

  Json initial_;
  std::vector<ScheduledTransaction> sorted_;
  std::vector<std::pair<Ticks, Json>> states_;
  std::vector<UpdateRecord> log_;
};

/// Failed transactions are always logged. With Skip later ones still apply.
UpdateTimeline schedule_updates(const Json& initial, std::vector<PatchTransaction> txns,
                                UpdateFailurePolicy policy = UpdateFailurePolicy::Skip);

}  // namespace xrpipe
