#pragma once

// Media access pipeline: scene -> media requests -> (optional input
// formatting) -> decoder instances -> circular buffers -> a presentation stub
// that samples every component buffer by timestamp and records which poc each
// component of an object contributed.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xrpipe/circular_buffer.hpp"
#include "xrpipe/input_formatting.hpp"
#include "xrpipe/scene_description.hpp"
#include "xrpipe/scene_updates.hpp"
#include "xrpipe/toy_stream.hpp"
#include "xrpipe/vdi_engine.hpp"

namespace xrpipe {

enum class Grouping { None, PerObject };
std::string_view to_string(Grouping g) noexcept;

struct FormattingStep {
  enum class Kind { Stack, Append, Filter, Insert };
  Kind kind = Kind::Stack;
  std::vector<std::string> inputs;  // stream names, consumed by the step
  std::string output;
  std::uint8_t cols = 1, rows = 1;  // stack
  TilePredicate predicate;          // filter
  AccessUnit unit;                  // insert
  std::size_t position = 0;         // insert
};

struct Scenario {
  Json scene;
  std::map<std::string, ToyStream> streams;  // keyed by media name
  EngineEnvelope envelope;
  std::map<std::string, std::uint32_t> decode_rates;  // keyed by decoder input
  std::uint32_t default_decode_rate = 1;
  std::map<std::string, Rational> frame_rates;  // overrides the stream's own
  Grouping grouping = Grouping::None;
  std::uint32_t skew_tolerance_pocs = 0;
  std::uint32_t steps = 10;
  Ticks presentation_tick_per_step = 3000;
  Ticks start_tick = 0;
  std::vector<FormattingStep> formatting;
  std::vector<PatchTransaction> updates;
};

/// Relative paths resolve against `base_dir`. Streams not listed explicitly
/// are loaded from the media's selected alternative uri (`alternative_index`,
/// default 0). Throws InvalidScenario.
Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Accepts {"frames", "width", "height", "grid_cols", "grid_rows", "fps",
/// "tick_rate", "payload_bytes", "stream_id", "profile"}.
TestStreamSpec parse_stream_spec(const Json& j);
Rational parse_rational(const Json& j);

struct PipelineInstance {
  std::string name;                // decoder input (media or formatting output)
  std::vector<std::string> media;  // media served by this instance
  InstanceId id{};
  std::optional<GroupId> group;
  std::uint32_t rate = 1;
  std::size_t capacity = 1;
};

struct PipelineObject {
  std::string name;
  std::vector<std::string> components;  // media names, media-index order
};

struct InstanceStats {
  std::string name;
  std::uint32_t instance = 0;
  std::optional<std::uint32_t> group;
  std::uint32_t rate = 1;
  std::uint64_t decoded = 0;
  std::uint64_t stalls = 0;
  std::string state;
};

struct BufferStats {
  std::string name;
  std::size_t capacity = 0;
  std::optional<std::size_t> occupancy_min;
  std::optional<std::size_t> occupancy_max;
  std::uint64_t writes = 0;
  std::uint64_t evictions = 0;
};

class Pipeline {
 public:
  /// build_pipeline: admits one instance per decoder input. Throws
  /// AdmissionFailed or MissingMedia.
  explicit Pipeline(Scenario scenario);

  const Scenario& scenario() const noexcept { return scenario_; }
  VideoDecodingEngine& engine() noexcept { return engine_; }
  const VideoDecodingEngine& engine() const noexcept { return engine_; }
  const Json& document() const noexcept { return document_; }
  const SceneGraph& graph() const noexcept { return graph_; }
  const std::vector<MediaRequest>& requests() const noexcept { return requests_; }
  const std::map<std::string, PipelineInstance>& instances() const noexcept { return instances_; }
  const std::vector<PipelineObject>& objects() const noexcept { return objects_; }
  const std::map<std::string, GroupId>& groups() const noexcept { return groups_; }

  /// Decoder input serving a media name, if active.
  const PipelineInstance* instance_for_media(const std::string& media) const;

  /// Switches to a new scene document: admits instances for new media first,
  /// then releases instances no longer requested. All or nothing: on failure
  /// nothing changes and AdmissionFailed or MissingMedia is thrown.
  void apply_document(const Json& document);

  /// Stats for instances released so far (final values at release).
  const std::vector<std::pair<InstanceStats, BufferStats>>& retired() const noexcept { return retired_; }

  InstanceStats stats_of(const PipelineInstance& p) const;
  /// Occupancy bounds are left empty; the run loop tracks those.
  BufferStats buffer_stats_of(const PipelineInstance& p) const;

 private:
  struct Input {
    ToyStream stream;
    std::vector<std::string> media;
  };

  Scenario scenario_;
  VideoDecodingEngine engine_;
  std::map<std::string, Input> inputs_;              // post-formatting pool
  std::map<std::string, std::string> input_of_media_;
  Json document_;
  SceneGraph graph_;
  std::vector<MediaRequest> requests_;
  std::map<std::string, PipelineInstance> instances_;
  std::vector<PipelineObject> objects_;
  std::map<std::string, GroupId> groups_;  // by object
  std::vector<std::pair<InstanceStats, BufferStats>> retired_;
};

Pipeline build_pipeline(const Scenario& scenario);

struct ObjectSync {
  std::string name;
  std::vector<std::string> components;
  std::int64_t max_poc_skew = 0;
  std::uint64_t starved_reads = 0;
};

struct PresentationStep {
  std::uint32_t step = 0;
  Ticks time = 0;
  // object -> component -> poc sampled (nullopt when starved)
  std::map<std::string, std::map<std::string, std::optional<std::uint32_t>>> pocs;
  Rational admitted_samples_per_tick{0};
  Rational available_samples_per_tick{0};
};

struct SyncReport {
  std::string grouping;
  std::uint32_t skew_tolerance_pocs = 0;
  Ticks presentation_tick_per_step = 0;
  std::vector<ObjectSync> objects;
  std::vector<InstanceStats> instances;
  std::vector<BufferStats> buffers;
  std::vector<PresentationStep> steps;
  std::vector<UpdateRecord> updates;
};

/// Called for every frame the presentation stub samples.
using FrameSink = std::function<void(std::uint32_t step, const std::string& object, const std::string& component,
                                     const Frame& frame)>;

struct RunOptions {
  /// 2 runs decoding and presentation on separate threads with a strict
  /// step handoff; results are identical to the single-threaded run.
  int threads = 1;
  FrameSink sink;
  UpdateFailurePolicy on_update_failure = UpdateFailurePolicy::Skip;
};

SyncReport run(Pipeline& pipeline, const RunOptions& options = {});

/// Transactions activate at the first step whose presentation time reaches
/// their activation_time. Failed transactions (patch, validation, admission)
/// leave the pipeline as it was.
SyncReport run_with_updates(Pipeline& pipeline, const std::vector<PatchTransaction>& updates,
                            const RunOptions& options = {});
SyncReport run_with_updates(Pipeline& pipeline, const UpdateTimeline& timeline, const RunOptions& options = {});

enum class ReportFormat { Text, Structured };
Json report_to_json(const SyncReport& report);
std::string emit_report(const SyncReport& report, ReportFormat format);

}  // namespace xrpipe
