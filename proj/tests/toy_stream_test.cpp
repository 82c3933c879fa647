#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "support.hpp"
#include "xrpipe/toy_stream.hpp"

namespace xrpipe {
namespace {

using testing::picture_unit;
using testing::random_source;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidScenario;
}

void put_le(Bytes& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

TEST(ToyStream, SerializedLayoutIsByteExact) {
  ToyStream s;
  s.stream_id = 0x01020304;
  s.tick_rate = 90000;
  s.units.push_back(picture_unit(s.stream_id, 7, -3, 5, 4, 2, Bytes{0xAA, 0xBB}));

  Bytes expected{'T', 'O', 'Y', 'S'};
  put_le(expected, 1, 2);
  put_le(expected, 0x01020304, 4);
  expected.push_back(0);  // TOY_BASE
  expected.push_back(1);
  expected.push_back(1);
  expected.push_back(0);
  put_le(expected, 90000, 4);
  put_le(expected, 1, 4);
  ASSERT_EQ(expected.size(), kStreamHeaderSize);
  put_le(expected, 7, 4);
  put_le(expected, static_cast<std::uint64_t>(-3), 8);
  put_le(expected, 5, 8);
  put_le(expected, 4, 2);
  put_le(expected, 2, 2);
  expected.insert(expected.end(), {0, 0, 0, 0});
  put_le(expected, 2, 4);
  ASSERT_EQ(expected.size(), kStreamHeaderSize + kUnitHeaderSize);
  expected.insert(expected.end(), {0xAA, 0xBB});

  EXPECT_EQ(serialize_stream(s), expected);
  EXPECT_EQ(parse_stream(expected), s);
}

TEST(ToyStream, RandomStreamsRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<Ticks> dts{std::uniform_int_distribution<Ticks>(-100, 100)(rng)};
    const auto n = std::uniform_int_distribution<int>(1, 10)(rng);
    while (static_cast<int>(dts.size()) < n) dts.push_back(dts.back() + std::uniform_int_distribution<Ticks>(0, 50)(rng));
    ToyStream s = random_source(rng, static_cast<std::uint32_t>(rng()), 1 + rng() % 30, 1 + rng() % 30, dts);
    if (rng() % 2) {
      AccessUnit ps = picture_unit(s.stream_id, 0, dts[0], dts[0], 0, 0, Bytes{1, 2});
      ps.is_parameter_set = true;
      s.units.insert(s.units.begin(), ps);
    }
    const Bytes bytes = serialize_stream(s);
    EXPECT_EQ(parse_stream(bytes), s);
    EXPECT_EQ(serialize_stream(parse_stream(bytes)), bytes);
  }
}

TEST(ToyStream, FileRoundTrip) {
  TestStreamSpec spec;
  spec.frames = 5;
  spec.grid_cols = 2;
  spec.grid_rows = 2;
  const ToyStream s = make_test_stream(spec);
  const auto path = std::filesystem::temp_directory_path() / "xrpipe_roundtrip.toys";
  write_stream_file(path, s);
  EXPECT_EQ(read_stream_file(path), s);
  std::filesystem::remove(path);
}

TEST(ToyStream, ParseRejectsBadInput) {
  TestStreamSpec spec;
  spec.frames = 2;
  Bytes good = serialize_stream(make_test_stream(spec));

  Bytes bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { parse_stream(bad_magic); }), ErrorCode::BadMagic);

  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, kStreamHeaderSize + 5, good.size() - 1}) {
    Bytes truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { parse_stream(truncated); }), ErrorCode::TruncatedInput) << "cut at " << cut;
  }

  Bytes trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(parse_stream(trailing), Error);
}

TEST(ToyStream, InvariantsAreEnforced) {
  auto base = [] {
    ToyStream s;
    s.stream_id = 1;
    s.units.push_back(picture_unit(1, 0, 0, 0, 4, 4, Bytes{1}));
    s.units.push_back(picture_unit(1, 1, 10, 10, 4, 4, Bytes{2}));
    return s;
  };
  EXPECT_NO_THROW(validate_stream(base()));

  ToyStream pts_before_dts = base();
  pts_before_dts.units[1].pts = 9;
  EXPECT_EQ(code_of([&] { validate_stream(pts_before_dts); }), ErrorCode::InvariantViolation);

  ToyStream dts_backwards = base();
  dts_backwards.units[1].dts = -1;
  dts_backwards.units[1].pts = -1;
  EXPECT_EQ(code_of([&] { validate_stream(dts_backwards); }), ErrorCode::InvariantViolation);

  ToyStream zero_size = base();
  zero_size.units[0].width = 0;
  EXPECT_EQ(code_of([&] { validate_stream(zero_size); }), ErrorCode::InvariantViolation);

  ToyStream foreign = base();
  foreign.units[1].stream_id = 2;
  EXPECT_EQ(code_of([&] { validate_stream(foreign); }), ErrorCode::InvariantViolation);

  ToyStream base_with_tile = base();
  base_with_tile.units[1].tile_col = 1;
  EXPECT_EQ(code_of([&] { validate_stream(base_with_tile); }), ErrorCode::InvariantViolation);

  // Tiled: the same tile twice in one picture.
  TestStreamSpec spec;
  spec.frames = 2;
  spec.grid_cols = 2;
  ToyStream tiled = make_test_stream(spec);
  tiled.units[1].tile_col = 0;
  EXPECT_EQ(code_of([&] { validate_stream(tiled); }), ErrorCode::InvariantViolation);

  // Tiled: tiles of one picture disagree on timestamps.
  ToyStream split_time = make_test_stream(spec);
  split_time.units[1].pts += 1;
  EXPECT_EQ(code_of([&] { validate_stream(split_time); }), ErrorCode::InvariantViolation);

  // Tiled: width must depend on the column only.
  ToyStream ragged = make_test_stream(spec);
  ragged.units[2].width += 1;
  EXPECT_EQ(code_of([&] { validate_stream(ragged); }), ErrorCode::InvariantViolation);
}

TEST(ToyStream, GeneratorTimestampsAndTiles) {
  TestStreamSpec spec;
  spec.stream_id = 9;
  spec.frames = 4;
  spec.width = 64;
  spec.height = 32;
  spec.grid_cols = 2;
  spec.grid_rows = 2;
  spec.fps = Rational(60000, 1001);
  const ToyStream s = make_test_stream(spec);
  EXPECT_EQ(s.codec_profile, CodecProfile::ToyTiled);
  ASSERT_EQ(s.units.size(), 16u);
  // floor(poc * 90000 * 1001 / 60000)
  const std::vector<Ticks> expected_dts{0, 1501, 3003, 4504};
  for (std::size_t i = 0; i < s.units.size(); ++i) {
    const AccessUnit& u = s.units[i];
    EXPECT_EQ(u.poc, i / 4);
    EXPECT_EQ(u.dts, expected_dts[i / 4]);
    EXPECT_EQ(u.pts, u.dts);
    EXPECT_EQ(u.tile_col, (i % 4) % 2);
    EXPECT_EQ(u.tile_row, (i % 4) / 2);
    EXPECT_EQ(u.width, 32);
    EXPECT_EQ(u.height, 16);
  }
  const auto pics = pictures_of(s);
  ASSERT_EQ(pics.size(), 4u);
  EXPECT_EQ(pics[2].unit_indices, (std::vector<std::size_t>{8, 9, 10, 11}));
  const GridGeometry g = grid_geometry(s);
  EXPECT_EQ(g.width(), 64u);
  EXPECT_EQ(g.height(), 32u);
  EXPECT_EQ(g.col_offset(1), 32u);
  EXPECT_EQ(g.row_offset(1), 16u);
  EXPECT_EQ(nominal_frame_interval(s), Ticks{1501});
}

TEST(ToyStream, NominalIntervalIsLowerMedian) {
  ToyStream s;
  s.stream_id = 1;
  const std::vector<Ticks> dts{0, 10, 30, 31, 100};  // deltas 10, 20, 1, 69
  for (std::size_t i = 0; i < dts.size(); ++i) s.units.push_back(picture_unit(1, i, dts[i], dts[i], 2, 2, Bytes{1}));
  EXPECT_EQ(nominal_frame_interval(s), Ticks{10});
  s.units.resize(1);
  EXPECT_EQ(nominal_frame_interval(s), std::nullopt);
}

TEST(ToyStream, CodecProfileNames) {
  EXPECT_EQ(parse_codec_profile("TOY_BASE"), CodecProfile::ToyBase);
  EXPECT_EQ(parse_codec_profile("TOY_TILED"), CodecProfile::ToyTiled);
  EXPECT_EQ(code_of([] { parse_codec_profile("HEVC"); }), ErrorCode::UnknownCodecProfile);
  EXPECT_EQ(to_string(CodecProfile::ToyTiled), "TOY_TILED");
}

}  // namespace
}  // namespace xrpipe
