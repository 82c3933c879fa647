#pragma once

// Input formatting: stream-to-stream transforms that let the number of
// decoder instances differ from the number of incoming elementary streams.
//
//   filter  keep a subset of tiles and/or pocs
//   insert  inject one access unit
//   append  temporal concatenation with poc/timestamp rebasing
//   stack   spatial composition of single-tile sources into one tiled stream
//
// Every output is re-validated against the toy stream invariants.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "xrpipe/toy_stream.hpp"

namespace xrpipe {

using TileCoord = std::pair<std::uint8_t, std::uint8_t>;  // (col, row)

struct TilePredicate {
  std::set<TileCoord> keep;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> poc_range;  // inclusive
};

/// Parameter-set units are always retained. Kept tiles are re-addressed
/// into the bounding grid of the kept set.
ToyStream filter(const ToyStream& stream, const TilePredicate& predicate);

/// A parameter-set unit takes the dts/pts of its successor (or predecessor
/// when appended at the end).
ToyStream insert(const ToyStream& stream, AccessUnit unit, std::size_t position);

/// Later streams are rebased: pocs by (max poc so far + 1), timestamps so the
/// first picture lands one nominal frame interval after the last dts so far.
/// The interval is the lower-median picture dts delta of the first stream
/// (falling back to the next stream that has one, then 1 tick).
ToyStream append(std::span<const ToyStream> streams);

struct StackLayout {
  std::uint8_t cols = 1;
  std::uint8_t rows = 1;
  std::vector<std::uint32_t> slots;  // source stream_ids, row-major
};

/// Sources must be single-tile and share their poc/dts/pts sequence. Output
/// stream_id is the stream in slot 0.
ToyStream stack(std::span<const ToyStream> streams, const StackLayout& layout);

}  // namespace xrpipe
