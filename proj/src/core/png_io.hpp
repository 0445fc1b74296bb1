#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowsentry {

/// Writes an 8-bit RGB PNG (no interlace, filter None on every scanline).
/// pixels are row-major interleaved RGB, size width*height*3.
std::vector<unsigned char> encode_png_rgb8(const unsigned char* pixels, int width, int height);
void write_png_rgb8(const std::string& path, const unsigned char* pixels, int width, int height);

struct PngImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;  // RGB interleaved
};

/// Reads an 8-bit RGB PNG (all five standard scanline filters supported).
PngImage decode_png_rgb8(const std::vector<unsigned char>& bytes);
PngImage read_png_rgb8(const std::string& path);

}  // namespace flowsentry
