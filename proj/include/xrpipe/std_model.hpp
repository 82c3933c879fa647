#pragma once

// Program-stream System Target Decoder: per-stream input buffer B_n fed by
// byte arrivals t(i), an instantaneous decoder D_n that removes access unit
// A_n(j) at td_n(j), and presentation of P_n(k) at tp_n(k).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xrpipe/toy_stream.hpp"

namespace xrpipe {

struct ArrivalEntry {
  std::uint64_t byte_index = 0;
  Ticks time = 0;

  bool operator==(const ArrivalEntry&) const = default;
};

/// Arrival time of every byte of one elementary stream. Byte i is the i-th
/// byte of the stream's concatenated access-unit payloads.
struct ArrivalSchedule {
  std::uint32_t stream_id = 0;
  std::vector<ArrivalEntry> entries;
};

/// t(i) = start + floor(i / rate).
ArrivalSchedule constant_rate_schedule(const ToyStream& stream, Rational rate_bytes_per_tick, Ticks start);

struct StdStreamConfig {
  std::uint64_t buffer_size_bytes = 0;
  /// td = arrival of the access unit's last byte + decode_delay ...
  Ticks decode_delay = 0;
  /// ... unless an explicit decode time is given per access unit.
  std::optional<std::vector<Ticks>> explicit_td;
};

/// One entry per stream, or a single entry shared by all streams.
struct StdConfig {
  std::vector<StdStreamConfig> streams;
};

enum class StdVerdict { Conformant, Overflow, Underflow };
std::string_view to_string(StdVerdict verdict) noexcept;

struct StdArrivalEvent {
  std::uint32_t stream_id = 0;
  Ticks time = 0;
  std::uint64_t bytes = 0;

  bool operator==(const StdArrivalEvent&) const = default;
};

struct StdDecodeEvent {
  std::uint32_t j = 0;
  Ticks time = 0;
  std::uint32_t decoder = 0;
  std::uint64_t bytes = 0;

  bool operator==(const StdDecodeEvent&) const = default;
};

struct StdPresentEvent {
  std::uint32_t k = 0;
  std::uint32_t source_j = 0;
  Ticks time = 0;

  bool operator==(const StdPresentEvent&) const = default;
};

struct OccupancySample {
  Ticks time = 0;
  std::uint32_t stream_id = 0;
  std::int64_t bytes = 0;  // negative only in UNDERFLOW traces

  bool operator==(const OccupancySample&) const = default;
};

struct StdStreamTrace {
  std::uint32_t stream_id = 0;
  std::vector<StdDecodeEvent> decodes;
  std::vector<StdPresentEvent> presentations;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::int64_t final_occupancy = 0;
  std::int64_t peak_occupancy = 0;

  bool operator==(const StdStreamTrace&) const = default;
};

struct StdTrace {
  std::vector<StdStreamTrace> streams;
  std::vector<StdArrivalEvent> arrivals;
  std::vector<OccupancySample> occupancy;
  StdVerdict verdict = StdVerdict::Conformant;
  std::optional<Ticks> violation_time;
  std::optional<std::uint32_t> violation_stream;

  bool operator==(const StdTrace&) const = default;
};

/// An access unit as the STD sees it: one coded picture (all its tiles) plus
/// any parameter-set units immediately preceding it. Trailing parameter sets
/// join the last access unit.
struct StdAccessUnit {
  std::uint64_t first_byte = 0;
  std::uint64_t size = 0;
  Ticks pts = 0;
};

std::vector<StdAccessUnit> std_access_units(const ToyStream& stream);

/// Never throws for non-conformance; the verdict records the first
/// violation in time. Throws Error(InvariantViolation) if schedules or
/// explicit decode times do not match the streams.
StdTrace simulate_std(std::span<const ToyStream> streams, std::span<const ArrivalSchedule> schedules,
                      const StdConfig& config);

enum class CdmRule {
  OneDecoderPerStream,      // rule i
  OnePresentationPerDecode, // rule ii
  PresentationTimestamp,    // rule iii
};
std::string_view to_string(CdmRule rule) noexcept;

struct CdmViolation {
  CdmRule rule;
  std::uint32_t stream_id = 0;
  std::string detail;
};

std::vector<CdmViolation> check_cdm_rules(const StdTrace& trace, std::span<const ToyStream> streams);

/// `EVENT kind=arrival|decode|present stream=<n> time=<ticks> bytes=|j=|k=`
/// lines ordered by time, then a final `VERDICT <verdict>` line.
std::string export_trace_lines(const StdTrace& trace);

nlohmann::json std_report(const StdTrace& trace);

}  // namespace xrpipe
