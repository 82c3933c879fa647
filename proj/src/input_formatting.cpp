#include "xrpipe/input_formatting.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "xrpipe/error.hpp"

namespace xrpipe {

ToyStream filter(const ToyStream& stream, const TilePredicate& predicate) {
  if (stream.codec_profile != CodecProfile::ToyTiled) {
    throw Error(ErrorCode::ProfileMismatch, "filtering needs a TOY_TILED stream");
  }
  if (predicate.keep.empty()) throw Error(ErrorCode::InvariantViolation, "tile predicate keeps nothing");
  for (const auto& [col, row] : predicate.keep) {
    if (col >= stream.grid_cols || row >= stream.grid_rows) {
      throw Error(ErrorCode::UnknownTile, "tile (" + std::to_string(col) + "," + std::to_string(row) +
                                              ") is outside the " + std::to_string(stream.grid_cols) + "x" +
                                              std::to_string(stream.grid_rows) + " grid");
    }
  }

  std::uint8_t min_col = 255, min_row = 255, max_col = 0, max_row = 0;
  for (const auto& [col, row] : predicate.keep) {
    min_col = std::min(min_col, col);
    min_row = std::min(min_row, row);
    max_col = std::max(max_col, col);
    max_row = std::max(max_row, row);
  }

  ToyStream out = stream;
  out.units.clear();
  out.grid_cols = static_cast<std::uint8_t>(max_col - min_col + 1);
  out.grid_rows = static_cast<std::uint8_t>(max_row - min_row + 1);
  bool any_picture = false;
  for (const AccessUnit& u : stream.units) {
    if (u.is_parameter_set) {
      out.units.push_back(u);
      continue;
    }
    if (!predicate.keep.contains({u.tile_col, u.tile_row})) continue;
    if (predicate.poc_range && (u.poc < predicate.poc_range->first || u.poc > predicate.poc_range->second)) {
      continue;
    }
    AccessUnit kept = u;
    kept.tile_col = static_cast<std::uint8_t>(u.tile_col - min_col);
    kept.tile_row = static_cast<std::uint8_t>(u.tile_row - min_row);
    out.units.push_back(std::move(kept));
    any_picture = true;
  }
  if (!any_picture) throw Error(ErrorCode::EmptyResult, "no picture unit matches the predicate");
  validate_stream(out);
  return out;
}

ToyStream insert(const ToyStream& stream, AccessUnit unit, std::size_t position) {
  if (position > stream.units.size()) {
    throw Error(ErrorCode::PositionOutOfRange, "position " + std::to_string(position) + " past " +
                                                   std::to_string(stream.units.size()) + " units");
  }
  unit.stream_id = stream.stream_id;
  if (unit.is_parameter_set) {
    if (position < stream.units.size()) {
      unit.dts = stream.units[position].dts;
    } else if (position > 0) {
      unit.dts = stream.units[position - 1].dts;
    }
    unit.pts = unit.dts;
  } else {
    if (position > 0 && unit.dts < stream.units[position - 1].dts) {
      throw Error(ErrorCode::DtsOrderViolation, "inserted dts precedes its predecessor");
    }
    if (position < stream.units.size() && unit.dts > stream.units[position].dts) {
      throw Error(ErrorCode::DtsOrderViolation, "inserted dts follows its successor");
    }
  }
  ToyStream out = stream;
  out.units.insert(out.units.begin() + static_cast<std::ptrdiff_t>(position), std::move(unit));
  validate_stream(out);
  return out;
}

ToyStream append(std::span<const ToyStream> streams) {
  if (streams.empty()) throw Error(ErrorCode::EmptyInput, "append needs at least one stream");
  const ToyStream& first = streams.front();
  validate_stream(first);
  if (streams.size() == 1) return first;

  const GridGeometry geometry = grid_geometry(first);
  for (std::size_t k = 1; k < streams.size(); ++k) {
    const ToyStream& s = streams[k];
    validate_stream(s);
    const GridGeometry g = grid_geometry(s);
    if (s.codec_profile != first.codec_profile || s.tick_rate != first.tick_rate ||
        s.grid_cols != first.grid_cols || s.grid_rows != first.grid_rows ||
        g.col_widths != geometry.col_widths || g.row_heights != geometry.row_heights) {
      throw Error(ErrorCode::ParameterMismatch, "stream " + std::to_string(k) +
                                                    " does not share the first stream's coding parameters");
    }
  }

  Ticks interval = 1;
  for (const ToyStream& s : streams) {
    if (auto i = nominal_frame_interval(s)) {
      interval = *i;
      break;
    }
  }

  ToyStream out = first;
  auto max_poc = [&]() -> std::int64_t {
    std::int64_t m = -1;
    for (const AccessUnit& u : out.units) {
      if (!u.is_parameter_set) m = std::max<std::int64_t>(m, u.poc);
    }
    return m;
  };

  for (std::size_t k = 1; k < streams.size(); ++k) {
    const ToyStream& s = streams[k];
    if (s.units.empty()) continue;
    const auto poc_offset = static_cast<std::uint32_t>(max_poc() + 1);
    const Ticks base = out.units.empty() ? 0 : out.units.back().dts + interval;
    const Ticks shift = base - s.units.front().dts;
    for (AccessUnit u : s.units) {
      u.stream_id = out.stream_id;
      u.poc += poc_offset;
      u.dts += shift;
      u.pts += shift;
      out.units.push_back(std::move(u));
    }
  }
  validate_stream(out);
  return out;
}

namespace {

struct SourcePictures {
  const ToyStream* stream = nullptr;
  std::vector<PictureRef> pictures;
};

}  // namespace

ToyStream stack(std::span<const ToyStream> streams, const StackLayout& layout) {
  const std::size_t cells = static_cast<std::size_t>(layout.cols) * layout.rows;
  if (cells == 0 || layout.slots.size() != cells || streams.size() != cells) {
    throw Error(ErrorCode::LayoutArityMismatch, std::to_string(streams.size()) + " streams for " +
                                                    std::to_string(layout.slots.size()) + " slots in a " +
                                                    std::to_string(layout.cols) + "x" +
                                                    std::to_string(layout.rows) + " layout");
  }

  std::vector<SourcePictures> sources;
  for (std::uint32_t id : layout.slots) {
    const auto it = std::find_if(streams.begin(), streams.end(), [&](const ToyStream& s) { return s.stream_id == id; });
    if (it == streams.end()) throw Error(ErrorCode::LayoutArityMismatch, "no source for slot stream " + std::to_string(id));
    if (std::any_of(sources.begin(), sources.end(), [&](const SourcePictures& p) { return p.stream == &*it; })) {
      throw Error(ErrorCode::LayoutArityMismatch, "stream " + std::to_string(id) + " assigned to two slots");
    }
    validate_stream(*it);
    if (it->grid_cols != 1 || it->grid_rows != 1) {
      throw Error(ErrorCode::FrameStructureMismatch, "stack sources must be single-tile");
    }
    sources.push_back({&*it, pictures_of(*it)});
  }

  const auto& reference = sources.front().pictures;
  std::vector<std::uint16_t> col_width(layout.cols, 0), row_height(layout.rows, 0);
  for (std::size_t slot = 0; slot < sources.size(); ++slot) {
    const auto& pics = sources[slot].pictures;
    if (pics.size() != reference.size()) {
      throw Error(ErrorCode::FrameStructureMismatch, "sources differ in picture count");
    }
    const std::size_t col = slot % layout.cols;
    const std::size_t row = slot / layout.cols;
    for (std::size_t p = 0; p < pics.size(); ++p) {
      if (pics[p].poc != reference[p].poc || pics[p].dts != reference[p].dts || pics[p].pts != reference[p].pts) {
        throw Error(ErrorCode::FrameStructureMismatch, "sources differ in poc or timestamp sequence");
      }
      const AccessUnit& u = sources[slot].stream->units[pics[p].unit_indices.front()];
      if (col_width[col] == 0) col_width[col] = u.width;
      if (row_height[row] == 0) row_height[row] = u.height;
      if (u.width != col_width[col] || u.height != row_height[row]) {
        throw Error(ErrorCode::FrameStructureMismatch, "source dimensions do not tile the layout");
      }
    }
  }

  ToyStream out;
  out.stream_id = sources.front().stream->stream_id;
  out.codec_profile = CodecProfile::ToyTiled;
  out.tick_rate = sources.front().stream->tick_rate;
  out.grid_cols = layout.cols;
  out.grid_rows = layout.rows;
  for (const auto& src : sources) {
    if (src.stream->tick_rate != out.tick_rate) {
      throw Error(ErrorCode::FrameStructureMismatch, "sources differ in tick_rate");
    }
  }

  auto emit_parameter_sets = [&](std::size_t from, std::size_t to, const ToyStream& src) {
    for (std::size_t i = from; i < to; ++i) {
      if (!src.units[i].is_parameter_set) continue;
      AccessUnit ps = src.units[i];
      ps.stream_id = out.stream_id;
      ps.tile_col = 0;
      ps.tile_row = 0;
      out.units.push_back(std::move(ps));
    }
  };

  std::vector<std::size_t> cursor(sources.size(), 0);
  for (std::size_t p = 0; p < reference.size(); ++p) {
    for (std::size_t slot = 0; slot < sources.size(); ++slot) {
      const std::size_t at = sources[slot].pictures[p].unit_indices.front();
      emit_parameter_sets(cursor[slot], at, *sources[slot].stream);
      cursor[slot] = at + 1;
    }
    for (std::size_t slot = 0; slot < sources.size(); ++slot) {
      AccessUnit tile = sources[slot].stream->units[sources[slot].pictures[p].unit_indices.front()];
      tile.stream_id = out.stream_id;
      tile.tile_col = static_cast<std::uint8_t>(slot % layout.cols);
      tile.tile_row = static_cast<std::uint8_t>(slot / layout.cols);
      out.units.push_back(std::move(tile));
    }
  }
  for (std::size_t slot = 0; slot < sources.size(); ++slot) {
    emit_parameter_sets(cursor[slot], sources[slot].stream->units.size(), *sources[slot].stream);
  }
  validate_stream(out);
  return out;
}

}  // namespace xrpipe
