#include "xrpipe/toy_decoder.hpp"

#include <algorithm>
#include <cstring>
#include <random>

#include "xrpipe/detail/hash.hpp"
#include "xrpipe/error.hpp"

namespace xrpipe {

bool crop_fits(const CropWindow& crop, std::uint32_t width, std::uint32_t height) {
  return crop.width > 0 && crop.height > 0 && crop.x <= width && crop.y <= height &&
         crop.width <= width - crop.x && crop.height <= height - crop.y;
}

Bytes decode_tile(std::span<const std::uint8_t> payload, std::uint32_t width, std::uint32_t height) {
  std::uint64_t key = detail::fnv1a64(payload);
  key = detail::fnv1a64_u64((std::uint64_t{width} << 32) | height, key);
  std::mt19937_64 gen(key);
  Bytes pixels(static_cast<std::size_t>(width) * height);
  std::size_t i = 0;
  while (i + 8 <= pixels.size()) {
    const std::uint64_t word = gen();
    for (int b = 0; b < 8; ++b) pixels[i++] = static_cast<std::uint8_t>(word >> (8 * b));
  }
  if (i < pixels.size()) {
    const std::uint64_t word = gen();
    for (int b = 0; i < pixels.size(); ++b) pixels[i++] = static_cast<std::uint8_t>(word >> (8 * b));
  }
  return pixels;
}

DecodedPicture decode_picture(const ToyStream& stream, const PictureRef& picture,
                              const GridGeometry& geometry, const std::optional<CropWindow>& crop) {
  DecodedPicture out;
  out.source_stream_id = stream.stream_id;
  out.poc = picture.poc;
  out.pts = picture.pts;

  Bytes canvas;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  if (stream.codec_profile == CodecProfile::ToyBase) {
    const AccessUnit& u = stream.units.at(picture.unit_indices.front());
    width = u.width;
    height = u.height;
    canvas = decode_tile(u.payload, width, height);
  } else {
    width = geometry.width();
    height = geometry.height();
    canvas.assign(static_cast<std::size_t>(width) * height, 0);
    for (std::size_t index : picture.unit_indices) {
      const AccessUnit& u = stream.units.at(index);
      const Bytes tile = decode_tile(u.payload, u.width, u.height);
      const std::uint32_t x0 = geometry.col_offset(u.tile_col);
      const std::uint32_t y0 = geometry.row_offset(u.tile_row);
      for (std::uint32_t row = 0; row < u.height; ++row) {
        std::memcpy(canvas.data() + static_cast<std::size_t>(y0 + row) * width + x0,
                    tile.data() + static_cast<std::size_t>(row) * u.width, u.width);
      }
    }
  }

  if (!crop) {
    out.width = width;
    out.height = height;
    out.pixels = std::move(canvas);
    return out;
  }

  const std::uint32_t x0 = std::min(crop->x, width);
  const std::uint32_t y0 = std::min(crop->y, height);
  out.width = std::min(crop->width, width - x0);
  out.height = std::min(crop->height, height - y0);
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  for (std::uint32_t row = 0; row < out.height; ++row) {
    std::memcpy(out.pixels.data() + static_cast<std::size_t>(row) * out.width,
                canvas.data() + static_cast<std::size_t>(y0 + row) * width + x0, out.width);
  }
  return out;
}

std::vector<DecodedPicture> decode_stream(const ToyStream& stream, const std::optional<CropWindow>& crop) {
  const GridGeometry geometry = grid_geometry(stream);
  std::vector<DecodedPicture> out;
  for (const PictureRef& picture : pictures_of(stream)) {
    out.push_back(decode_picture(stream, picture, geometry, crop));
  }
  return out;
}

namespace {

constexpr std::size_t kFrameHeaderSize = 28;

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v |= std::uint64_t{in[offset + i]} << (8 * i);
  return v;
}

}  // namespace

Bytes encode_picture_frame(const DecodedPicture& picture) {
  Bytes out;
  out.reserve(kFrameHeaderSize + picture.pixels.size());
  put_u32(out, picture.source_stream_id);
  put_u32(out, picture.poc);
  const auto pts = static_cast<std::uint64_t>(picture.pts);
  put_u32(out, static_cast<std::uint32_t>(pts));
  put_u32(out, static_cast<std::uint32_t>(pts >> 32));
  put_u32(out, picture.width);
  put_u32(out, picture.height);
  put_u32(out, picture.pixel_format);
  out.insert(out.end(), picture.pixels.begin(), picture.pixels.end());
  return out;
}

DecodedPicture decode_picture_frame(std::span<const std::uint8_t> frame) {
  if (frame.size() < kFrameHeaderSize) {
    throw Error(ErrorCode::TruncatedInput, "picture frame shorter than its header");
  }
  DecodedPicture p;
  p.source_stream_id = static_cast<std::uint32_t>(get_le(frame, 0, 4));
  p.poc = static_cast<std::uint32_t>(get_le(frame, 4, 4));
  p.pts = static_cast<Ticks>(get_le(frame, 8, 8));
  p.width = static_cast<std::uint32_t>(get_le(frame, 16, 4));
  p.height = static_cast<std::uint32_t>(get_le(frame, 20, 4));
  p.pixel_format = static_cast<std::uint32_t>(get_le(frame, 24, 4));
  if (frame.size() - kFrameHeaderSize != static_cast<std::size_t>(p.width) * p.height) {
    throw Error(ErrorCode::TruncatedInput, "picture frame pixel count disagrees with its header");
  }
  p.pixels.assign(frame.begin() + kFrameHeaderSize, frame.end());
  return p;
}

}  // namespace xrpipe
