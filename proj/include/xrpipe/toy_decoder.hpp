#pragma once

// Deterministic "decoder" for toy streams. Each tile's pixels are a keyed
// expansion of its payload, so the pixels of a picture depend only on the
// payloads and dimensions of its tiles (never on stream id, poc, or tile
// position). That is what makes merged-vs-separate decode comparisons exact.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "xrpipe/toy_stream.hpp"

namespace xrpipe {

struct CropWindow {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  bool operator==(const CropWindow&) const = default;
};

bool crop_fits(const CropWindow& crop, std::uint32_t width, std::uint32_t height);

constexpr std::uint32_t fourcc(char a, char b, char c, char d) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(a)) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b)) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(c)) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(d)) << 24);
}

inline constexpr std::uint32_t kPixelFormatGray8 = fourcc('G', 'R', 'A', 'Y');

/// One presentation unit: a decoded (and possibly cropped) 8-bit plane.
struct DecodedPicture {
  std::uint32_t source_stream_id = 0;
  std::uint32_t poc = 0;
  Ticks pts = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t pixel_format = kPixelFormatGray8;
  Bytes pixels;

  bool operator==(const DecodedPicture&) const = default;
};

Bytes decode_tile(std::span<const std::uint8_t> payload, std::uint32_t width, std::uint32_t height);

/// Crop is intersected with the picture bounds.
DecodedPicture decode_picture(const ToyStream& stream, const PictureRef& picture,
                              const GridGeometry& geometry,
                              const std::optional<CropWindow>& crop = std::nullopt);

std::vector<DecodedPicture> decode_stream(const ToyStream& stream,
                                          const std::optional<CropWindow>& crop = std::nullopt);

/// Frame payload written into circular buffers by decoder instances:
/// u32 stream_id, u32 poc, i64 pts, u32 width, u32 height, u32 pixel_format,
/// then width*height pixel bytes.
Bytes encode_picture_frame(const DecodedPicture& picture);
DecodedPicture decode_picture_frame(std::span<const std::uint8_t> frame);

}  // namespace xrpipe
