#pragma once

// Oracles, reference models, and generators shared by the unit tests and the
// acceptance runner. Nothing here calls into the code under test to compute
// an expected value.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xrpipe/circular_buffer.hpp"
#include "xrpipe/maf_pipeline.hpp"
#include "xrpipe/scene_updates.hpp"
#include "xrpipe/toy_decoder.hpp"
#include "xrpipe/toy_stream.hpp"

namespace xrpipe::testing {

std::filesystem::path fixture_dir();
std::filesystem::path data_dir();
std::filesystem::path scenario_dir();
std::filesystem::path cli_path();

Json read_json(const std::filesystem::path& path);

// ---------------------------------------------------------------- streams

/// Builds a stream unit by unit; timestamps are given explicitly.
AccessUnit picture_unit(std::uint32_t stream_id, std::uint32_t poc, Ticks dts, Ticks pts, std::uint16_t w,
                        std::uint16_t h, Bytes payload, std::uint8_t col = 0, std::uint8_t row = 0);

Bytes random_bytes(std::mt19937_64& rng, std::size_t n);

/// Random single-tile TOY_BASE stream with the given frame structure.
ToyStream random_source(std::mt19937_64& rng, std::uint32_t stream_id, std::uint16_t w, std::uint16_t h,
                        const std::vector<Ticks>& dts);

// ---------------------------------------------------------------- decode oracles

/// Places the sources' pixel planes (row-major slots) into one plane.
/// Column widths come from row 0, row heights from column 0.
Bytes compose_planes(const std::vector<DecodedPicture>& slots, std::size_t cols, std::size_t rows);

// ---------------------------------------------------------------- circular buffer

/// Brute-force reference for the circular buffer contract.
class ReferenceRing {
 public:
  explicit ReferenceRing(std::size_t capacity) : capacity_(capacity) {}

  std::uint64_t write(Bytes data, Ticks ts);
  std::optional<Frame> read();
  /// nullopt with `code` set when the lookup fails.
  std::optional<Frame> read_at(const FrameSelector& sel, ErrorCode* code) const;
  std::size_t stored() const { return frames_.size(); }
  std::uint64_t evictions() const { return evictions_; }

 private:
  std::size_t capacity_;
  std::deque<Frame> frames_;
  std::uint64_t next_ = 0;
  std::uint64_t evictions_ = 0;
};

/// Payload carrying its own checksum in the last 8 bytes.
Bytes checksummed_payload(std::mt19937_64& rng, std::uint64_t seq, std::size_t max_len);
bool checksum_ok(const Bytes& payload);

// ---------------------------------------------------------------- scenes

/// Scene with one mesh whose primitives each use a video texture over one
/// timed media component. All components share `object`.
Json component_scene(const std::vector<std::string>& media, const std::string& object, std::int64_t count = 8);

Scenario component_scenario(const std::vector<std::string>& media, const std::vector<std::uint32_t>& rates,
                            Grouping grouping, std::uint32_t tolerance, std::uint32_t frames = 40,
                            std::uint32_t steps = 10, Ticks tick_per_step = 9000, std::int64_t count = 8);

/// Skew recomputed from the sampled poc tuples of a report, per object.
std::map<std::string, std::int64_t> skew_from_steps(const SyncReport& report);

// ---------------------------------------------------------------- updates

/// A richer scene where every element of a tracked array carries a unique
/// `extras.tag`, so that reference identity can be checked across edits.
Json tagged_scene(std::mt19937_64& rng, std::uint64_t& next_tag);

struct GeneratedTransaction {
  PatchTransaction txn;
  bool injected_failure = false;
};

/// Random edit sequence against `doc` (structural edits on nodes, meshes, and
/// materials), optionally followed by one failing operation.
GeneratedTransaction random_transaction(const Json& doc, std::mt19937_64& rng, double failure_rate,
                                        std::uint64_t& next_tag);

/// For each tagged element that holds references: field -> target tags.
using ReferenceIdentity = std::map<std::string, std::map<std::string, std::vector<std::string>>>;
ReferenceIdentity reference_identity(const Json& doc);

/// Number of references that name a different element after the edit than
/// before it, plus references to untagged or missing elements. References
/// to elements the edit removed are expected to be gone.
std::size_t retargeted_references(const Json& before, const Json& after);

// ---------------------------------------------------------------- CLI

struct CommandResult {
  int exit_code = -1;
  std::string out;
};
/// Runs the CLI with `args` (already shell-quoted where needed); stdout only.
CommandResult run_cli(const std::string& args);
std::string read_file(const std::filesystem::path& path);

}  // namespace xrpipe::testing
