#pragma once

// Toy elementary-stream format. A stand-in for coded video whose "coding" is
// trivial, so that every bitstream operation on it is exactly verifiable.
//
// Container layout (little-endian):
//   header  "TOYS" u16 version=1, u32 stream_id, u8 codec_profile,
//           u8 grid_cols, u8 grid_rows, u8 reserved, u32 tick_rate,
//           u32 unit_count                                   (22 bytes)
//   unit    u32 poc, i64 dts, i64 pts, u16 width, u16 height, u8 tile_col,
//           u8 tile_row, u8 flags (bit0 = parameter set), u8 reserved,
//           u32 payload_len, payload                    (32 bytes + payload)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace xrpipe {

using Ticks = std::int64_t;
using Rational = boost::rational<std::int64_t>;
using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kStreamHeaderSize = 22;
inline constexpr std::size_t kUnitHeaderSize = 32;
inline constexpr std::uint16_t kStreamVersion = 1;

enum class CodecProfile : std::uint8_t { ToyBase = 0, ToyTiled = 1 };

std::string_view to_string(CodecProfile profile) noexcept;
/// Accepts "TOY_BASE" / "TOY_TILED"; throws Error(UnknownCodecProfile).
CodecProfile parse_codec_profile(std::string_view name);

struct AccessUnit {
  std::uint32_t stream_id = 0;
  std::uint32_t poc = 0;
  Ticks dts = 0;
  Ticks pts = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t tile_col = 0;
  std::uint8_t tile_row = 0;
  Bytes payload;
  bool is_parameter_set = false;

  bool operator==(const AccessUnit&) const = default;
};

struct ToyStream {
  std::uint32_t stream_id = 0;
  CodecProfile codec_profile = CodecProfile::ToyBase;
  std::uint32_t tick_rate = 90000;
  std::uint8_t grid_cols = 1;
  std::uint8_t grid_rows = 1;
  std::vector<AccessUnit> units;

  bool operator==(const ToyStream&) const = default;
};

/// Throws Error(InvariantViolation) describing the first broken invariant.
///
/// Beyond the per-unit rules (pts >= dts, non-zero dimensions for pictures,
/// shared stream_id, non-decreasing dts) a picture is the contiguous run of
/// non-parameter-set units sharing a poc. In TOY_BASE every picture is a
/// single unit; in TOY_TILED the tiles of a picture share dts/pts, each
/// (poc, tile) appears once, and tile width depends only on the column and
/// tile height only on the row so pictures compose to a rectangle.
void validate_stream(const ToyStream& stream);

Bytes serialize_stream(const ToyStream& stream);
ToyStream parse_stream(std::span<const std::uint8_t> bytes);

ToyStream read_stream_file(const std::filesystem::path& path);
void write_stream_file(const std::filesystem::path& path, const ToyStream& stream);

/// Coded picture view: indices of the units that carry one picture's tiles.
struct PictureRef {
  std::uint32_t poc = 0;
  Ticks dts = 0;
  Ticks pts = 0;
  std::vector<std::size_t> unit_indices;
};

std::vector<PictureRef> pictures_of(const ToyStream& stream);

/// Column widths and row heights of a tiled stream; for TOY_BASE a single
/// cell sized from the first picture unit. Columns or rows with no tile
/// anywhere in the stream have extent 0.
struct GridGeometry {
  std::vector<std::uint32_t> col_widths;
  std::vector<std::uint32_t> row_heights;

  std::uint32_t width() const;
  std::uint32_t height() const;
  std::uint32_t col_offset(std::size_t col) const;
  std::uint32_t row_offset(std::size_t row) const;
};

GridGeometry grid_geometry(const ToyStream& stream);

/// Lower median of dts deltas between consecutive pictures; nullopt when the
/// stream holds fewer than two pictures.
std::optional<Ticks> nominal_frame_interval(const ToyStream& stream);

struct TestStreamSpec {
  std::uint32_t stream_id = 0;
  std::uint32_t frames = 1;
  std::uint16_t width = 64;   // full picture; split evenly across the grid
  std::uint16_t height = 64;
  std::uint8_t grid_cols = 1;
  std::uint8_t grid_rows = 1;
  Rational fps{30};
  std::uint32_t tick_rate = 90000;
  std::uint32_t payload_bytes = 32;  // per unit
  /// Defaults to TOY_TILED for grids larger than 1x1, TOY_BASE otherwise.
  std::optional<CodecProfile> profile;
};

/// Fixture generator: poc = decode index, dts = pts = floor(poc * tick_rate / fps),
/// one unit per tile in row-major order, payload bytes keyed by
/// (stream_id, poc, tile).
ToyStream make_test_stream(const TestStreamSpec& spec);

}  // namespace xrpipe
