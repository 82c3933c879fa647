#include "xrpipe/toy_stream.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>

#include "xrpipe/detail/hash.hpp"
#include "xrpipe/error.hpp"

namespace xrpipe {

namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'O', 'Y', 'S'};

[[noreturn]] void invariant(const std::string& what) {
  throw Error(ErrorCode::InvariantViolation, what);
}

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    auto raw = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(raw >> (8 * i)));
    }
  }

  void put_bytes(std::span<const std::uint8_t> bytes) {
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }

 private:
  Bytes& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> raw = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      raw |= static_cast<std::make_unsigned_t<T>>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(raw);
  }

  Bytes get_bytes(std::size_t n) {
    need(n);
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
              in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::TruncatedInput,
                  "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                      ", have " + std::to_string(in_.size() - pos_));
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string unit_label(std::size_t i) { return "unit " + std::to_string(i); }

}  // namespace

std::string_view to_string(CodecProfile profile) noexcept {
  switch (profile) {
    case CodecProfile::ToyBase: return "TOY_BASE";
    case CodecProfile::ToyTiled: return "TOY_TILED";
  }
  return "UNKNOWN";
}

CodecProfile parse_codec_profile(std::string_view name) {
  if (name == "TOY_BASE") return CodecProfile::ToyBase;
  if (name == "TOY_TILED") return CodecProfile::ToyTiled;
  throw Error(ErrorCode::UnknownCodecProfile, std::string(name));
}

void validate_stream(const ToyStream& stream) {
  if (stream.tick_rate == 0) invariant("tick_rate must be positive");
  if (stream.grid_cols == 0 || stream.grid_rows == 0) invariant("grid dimensions must be positive");
  const bool tiled = stream.codec_profile == CodecProfile::ToyTiled;
  if (!tiled && (stream.grid_cols != 1 || stream.grid_rows != 1)) {
    invariant("TOY_BASE streams use a 1x1 grid");
  }

  std::map<std::uint8_t, std::uint16_t> col_width;
  std::map<std::uint8_t, std::uint16_t> row_height;
  std::set<std::uint32_t> finished_pocs;
  std::set<std::pair<std::uint8_t, std::uint8_t>> open_tiles;
  std::optional<std::uint32_t> open_poc;
  Ticks open_dts = 0;
  Ticks open_pts = 0;

  for (std::size_t i = 0; i < stream.units.size(); ++i) {
    const AccessUnit& u = stream.units[i];
    if (u.stream_id != stream.stream_id) invariant(unit_label(i) + " has a foreign stream_id");
    if (u.pts < u.dts) invariant(unit_label(i) + " has pts < dts");
    if (i > 0 && u.dts < stream.units[i - 1].dts) invariant(unit_label(i) + " decreases dts");
    if (u.is_parameter_set) continue;

    if (u.width == 0 || u.height == 0) invariant(unit_label(i) + " has zero picture dimensions");
    if (u.tile_col >= stream.grid_cols || u.tile_row >= stream.grid_rows) {
      invariant(unit_label(i) + " lies outside the tile grid");
    }

    if (open_poc && *open_poc == u.poc && tiled) {
      if (u.dts != open_dts || u.pts != open_pts) {
        invariant(unit_label(i) + " tile disagrees with its picture's timestamps");
      }
      if (!open_tiles.insert({u.tile_col, u.tile_row}).second) {
        invariant(unit_label(i) + " repeats a tile within poc " + std::to_string(u.poc));
      }
    } else {
      if (open_poc) finished_pocs.insert(*open_poc);
      if (finished_pocs.contains(u.poc)) {
        invariant(unit_label(i) + " reuses poc " + std::to_string(u.poc));
      }
      open_poc = u.poc;
      open_dts = u.dts;
      open_pts = u.pts;
      open_tiles = {{u.tile_col, u.tile_row}};
    }

    if (tiled) {
      auto [cw, cnew] = col_width.emplace(u.tile_col, u.width);
      if (!cnew && cw->second != u.width) invariant(unit_label(i) + " breaks its column width");
      auto [rh, rnew] = row_height.emplace(u.tile_row, u.height);
      if (!rnew && rh->second != u.height) invariant(unit_label(i) + " breaks its row height");
    }
  }
}

Bytes serialize_stream(const ToyStream& stream) {
  validate_stream(stream);
  Bytes out;
  Writer w(out);
  w.put_bytes(kMagic);
  w.put<std::uint16_t>(kStreamVersion);
  w.put<std::uint32_t>(stream.stream_id);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(stream.codec_profile));
  w.put<std::uint8_t>(stream.grid_cols);
  w.put<std::uint8_t>(stream.grid_rows);
  w.put<std::uint8_t>(0);
  w.put<std::uint32_t>(stream.tick_rate);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(stream.units.size()));
  for (const AccessUnit& u : stream.units) {
    w.put<std::uint32_t>(u.poc);
    w.put<std::int64_t>(u.dts);
    w.put<std::int64_t>(u.pts);
    w.put<std::uint16_t>(u.width);
    w.put<std::uint16_t>(u.height);
    w.put<std::uint8_t>(u.tile_col);
    w.put<std::uint8_t>(u.tile_row);
    w.put<std::uint8_t>(u.is_parameter_set ? 1 : 0);
    w.put<std::uint8_t>(0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(u.payload.size()));
    w.put_bytes(u.payload);
  }
  return out;
}

ToyStream parse_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 && std::equal(bytes.begin(), bytes.end(), std::begin(kMagic))) {
    throw Error(ErrorCode::TruncatedInput, "stream ends inside the magic");
  }
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "stream does not start with \"TOYS\"");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint16_t>();
  if (version != kStreamVersion) invariant("unsupported container version " + std::to_string(version));

  ToyStream s;
  s.stream_id = r.get<std::uint32_t>();
  const auto profile = r.get<std::uint8_t>();
  if (profile > static_cast<std::uint8_t>(CodecProfile::ToyTiled)) {
    invariant("unknown codec_profile " + std::to_string(profile));
  }
  s.codec_profile = static_cast<CodecProfile>(profile);
  s.grid_cols = r.get<std::uint8_t>();
  s.grid_rows = r.get<std::uint8_t>();
  r.get<std::uint8_t>();
  s.tick_rate = r.get<std::uint32_t>();
  const auto count = r.get<std::uint32_t>();

  // Never trust the declared count for allocation.
  s.units.reserve(std::min<std::size_t>(count, r.remaining() / kUnitHeaderSize));
  for (std::uint32_t i = 0; i < count; ++i) {
    AccessUnit u;
    u.stream_id = s.stream_id;
    u.poc = r.get<std::uint32_t>();
    u.dts = r.get<std::int64_t>();
    u.pts = r.get<std::int64_t>();
    u.width = r.get<std::uint16_t>();
    u.height = r.get<std::uint16_t>();
    u.tile_col = r.get<std::uint8_t>();
    u.tile_row = r.get<std::uint8_t>();
    const auto flags = r.get<std::uint8_t>();
    if (flags & ~1u) invariant(unit_label(i) + " sets reserved flag bits");
    u.is_parameter_set = (flags & 1u) != 0;
    r.get<std::uint8_t>();
    u.payload = r.get_bytes(r.get<std::uint32_t>());
    s.units.push_back(std::move(u));
  }
  if (r.remaining() != 0) invariant(std::to_string(r.remaining()) + " trailing bytes after last unit");
  validate_stream(s);
  return s;
}

ToyStream read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_stream(bytes);
}

void write_stream_file(const std::filesystem::path& path, const ToyStream& stream) {
  const Bytes bytes = serialize_stream(stream);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<PictureRef> pictures_of(const ToyStream& stream) {
  std::vector<PictureRef> pictures;
  const bool tiled = stream.codec_profile == CodecProfile::ToyTiled;
  for (std::size_t i = 0; i < stream.units.size(); ++i) {
    const AccessUnit& u = stream.units[i];
    if (u.is_parameter_set) continue;
    if (tiled && !pictures.empty() && pictures.back().poc == u.poc) {
      pictures.back().unit_indices.push_back(i);
      continue;
    }
    pictures.push_back(PictureRef{u.poc, u.dts, u.pts, {i}});
  }
  return pictures;
}

std::uint32_t GridGeometry::width() const { return col_offset(col_widths.size()); }
std::uint32_t GridGeometry::height() const { return row_offset(row_heights.size()); }

std::uint32_t GridGeometry::col_offset(std::size_t col) const {
  std::uint32_t x = 0;
  for (std::size_t c = 0; c < col && c < col_widths.size(); ++c) x += col_widths[c];
  return x;
}

std::uint32_t GridGeometry::row_offset(std::size_t row) const {
  std::uint32_t y = 0;
  for (std::size_t r = 0; r < row && r < row_heights.size(); ++r) y += row_heights[r];
  return y;
}

GridGeometry grid_geometry(const ToyStream& stream) {
  GridGeometry g;
  g.col_widths.assign(stream.grid_cols, 0);
  g.row_heights.assign(stream.grid_rows, 0);
  for (const AccessUnit& u : stream.units) {
    if (u.is_parameter_set) continue;
    if (u.tile_col < g.col_widths.size()) g.col_widths[u.tile_col] = u.width;
    if (u.tile_row < g.row_heights.size()) g.row_heights[u.tile_row] = u.height;
    if (stream.codec_profile == CodecProfile::ToyBase) break;
  }
  return g;
}

std::optional<Ticks> nominal_frame_interval(const ToyStream& stream) {
  const auto pictures = pictures_of(stream);
  if (pictures.size() < 2) return std::nullopt;
  std::vector<Ticks> deltas;
  deltas.reserve(pictures.size() - 1);
  for (std::size_t i = 1; i < pictures.size(); ++i) deltas.push_back(pictures[i].dts - pictures[i - 1].dts);
  std::sort(deltas.begin(), deltas.end());
  return deltas[(deltas.size() - 1) / 2];
}

ToyStream make_test_stream(const TestStreamSpec& spec) {
  if (spec.frames == 0 || spec.width == 0 || spec.height == 0 || spec.grid_cols == 0 ||
      spec.grid_rows == 0 || spec.fps <= 0 || spec.tick_rate == 0) {
    throw Error(ErrorCode::InvariantViolation, "test stream spec counts must be positive");
  }
  if (spec.width < spec.grid_cols || spec.height < spec.grid_rows) {
    throw Error(ErrorCode::InvariantViolation, "picture smaller than its tile grid");
  }

  ToyStream s;
  s.stream_id = spec.stream_id;
  s.tick_rate = spec.tick_rate;
  s.grid_cols = spec.grid_cols;
  s.grid_rows = spec.grid_rows;
  const bool multi_tile = spec.grid_cols * spec.grid_rows > 1;
  s.codec_profile = spec.profile.value_or(multi_tile ? CodecProfile::ToyTiled : CodecProfile::ToyBase);

  // Last column / row absorbs the remainder so widths stay per-column.
  auto extent = [](std::uint16_t total, std::uint8_t parts, std::uint8_t index) {
    const auto base = static_cast<std::uint16_t>(total / parts);
    return index + 1 == parts ? static_cast<std::uint16_t>(total - base * (parts - 1)) : base;
  };

  for (std::uint32_t poc = 0; poc < spec.frames; ++poc) {
    const Rational t = Rational(poc) * Rational(spec.tick_rate) / spec.fps;
    const Ticks ts = t.numerator() / t.denominator();
    for (std::uint8_t row = 0; row < spec.grid_rows; ++row) {
      for (std::uint8_t col = 0; col < spec.grid_cols; ++col) {
        AccessUnit u;
        u.stream_id = spec.stream_id;
        u.poc = poc;
        u.dts = ts;
        u.pts = ts;
        u.width = extent(spec.width, spec.grid_cols, col);
        u.height = extent(spec.height, spec.grid_rows, row);
        u.tile_col = col;
        u.tile_row = row;
        std::uint64_t key = detail::fnv1a64_u64(spec.stream_id, 0xcbf29ce484222325ULL);
        key = detail::fnv1a64_u64(poc, key);
        key = detail::fnv1a64_u64((std::uint64_t{row} << 8) | col, key);
        std::mt19937_64 gen(key);
        u.payload.resize(spec.payload_bytes);
        for (auto& b : u.payload) b = static_cast<std::uint8_t>(gen());
        s.units.push_back(std::move(u));
      }
    }
  }
  return s;
}

}  // namespace xrpipe
