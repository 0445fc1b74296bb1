#include "core/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace flowsentry {

namespace {

void put_u32be(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

std::uint32_t get_u32be(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& data) {
  put_u32be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + data.size()));
  put_u32be(out, static_cast<std::uint32_t>(crc));
}

constexpr unsigned char kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<unsigned char> encode_png_rgb8(const unsigned char* pixels, int width, int height) {
  if (width <= 0 || height <= 0) fail(Errc::InvalidArgument, "png: bad dimensions");
  const std::size_t stride = static_cast<std::size_t>(width) * 3;

  std::vector<unsigned char> raw;
  raw.reserve((stride + 1) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter None
    raw.insert(raw.end(), pixels + y * stride, pixels + (y + 1) * stride);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    fail(Errc::Internal, "png: deflate failed");
  compressed.resize(bound);

  std::vector<unsigned char> ihdr;
  put_u32be(ihdr, static_cast<std::uint32_t>(width));
  put_u32be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);

  std::vector<unsigned char> out(kSignature, kSignature + 8);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});
  return out;
}

void write_png_rgb8(const std::string& path, const unsigned char* pixels, int width, int height) {
  const auto bytes = encode_png_rgb8(pixels, width, height);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot write PNG: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::Io, "short write on PNG: " + path);
}

PngImage decode_png_rgb8(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    fail(Errc::Parse, "png: bad signature");

  PngImage img;
  std::vector<unsigned char> idat;
  std::size_t pos = 8;
  bool saw_ihdr = false;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t len = get_u32be(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) fail(Errc::Parse, "png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const unsigned char* data = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(Errc::Parse, "png: bad IHDR");
      img.width = static_cast<int>(get_u32be(data));
      img.height = static_cast<int>(get_u32be(data + 4));
      if (data[8] != 8 || data[9] != 2 || data[12] != 0)
        fail(Errc::Parse, "png: only 8-bit non-interlaced RGB is supported");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || img.width <= 0 || img.height <= 0) fail(Errc::Parse, "png: missing IHDR");

  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  const std::size_t raw_size = (stride + 1) * static_cast<std::size_t>(img.height);
  std::vector<unsigned char> raw(raw_size);
  uLongf dest_len = static_cast<uLongf>(raw_size);
  if (uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      dest_len != raw_size)
    fail(Errc::Parse, "png: inflate failed");

  img.pixels.resize(stride * static_cast<std::size_t>(img.height));
  std::vector<unsigned char> prev(stride, 0);
  for (int y = 0; y < img.height; ++y) {
    const unsigned char filter = raw[static_cast<std::size_t>(y) * (stride + 1)];
    const unsigned char* src = &raw[static_cast<std::size_t>(y) * (stride + 1) + 1];
    unsigned char* dst = &img.pixels[static_cast<std::size_t>(y) * stride];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= 3 ? dst[i - 3] : 0;          // left
      const int b = prev[i];                           // up
      const int c = i >= 3 ? prev[i - 3] : 0;          // up-left
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: fail(Errc::Parse, "png: unknown filter type");
      }
      dst[i] = static_cast<unsigned char>(v & 0xff);
    }
    std::memcpy(prev.data(), dst, stride);
  }
  return img;
}

PngImage read_png_rgb8(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open PNG: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_png_rgb8(bytes);
}

}  // namespace flowsentry
