#pragma once

// 8-bit encodings of clips: PNG frames, the FVID raw container, and checksums.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractalvid/clip.hpp"

namespace fvid {

namespace fs = std::filesystem;

using Bytes = std::vector<std::uint8_t>;

/// Any lit pixel maps to at least 1 so occupancy survives quantization.
inline std::uint8_t quantize(float v) {
  if (!(v > 0.0f)) return 0;
  const long q = std::lround(std::min(v, 1.0f) * 255.0f);
  return static_cast<std::uint8_t>(std::max(1L, q));
}

inline Bytes to_bytes(const Clip& c) {
  Bytes out(c.data().size());
  std::transform(c.data().begin(), c.data().end(), out.begin(), quantize);
  return out;
}

inline Clip from_bytes(const Bytes& b, int frames, int height, int width) {
  Clip c(frames, height, width);
  if (b.size() != c.data().size()) throw std::invalid_argument("from_bytes: size mismatch");
  std::transform(b.begin(), b.end(), c.data().begin(), [](std::uint8_t v) { return v / 255.0f; });
  return c;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::uint8_t* p, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Checksum over the quantized payload and its shape.
inline std::string clip_checksum(const Clip& c) {
  const Bytes b = to_bytes(c);
  const std::uint16_t dims[3] = {static_cast<std::uint16_t>(c.frames()), static_cast<std::uint16_t>(c.height()),
                                 static_cast<std::uint16_t>(c.width())};
  std::uint64_t h = fnv1a64(reinterpret_cast<const std::uint8_t*>(dims), sizeof dims);
  return hex64(fnv1a64(b.data(), b.size(), h));
}

// ---------------------------------------------------------------------------
// Files

inline Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

/// Writes to a sibling temp file, then renames over the target.
inline void write_file_atomic(const fs::path& p, const std::uint8_t* data, std::size_t n) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

inline void write_file_atomic(const fs::path& p, const Bytes& b) { write_file_atomic(p, b.data(), b.size()); }
inline void write_file_atomic(const fs::path& p, const std::string& s) {
  write_file_atomic(p, reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

// ---------------------------------------------------------------------------
// PNG

struct GrayImage {
  int width = 0, height = 0;
  Bytes pixels;
};

inline Bytes encode_png(const std::uint8_t* pixels, int width, int height) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels, 0, nullptr))
    throw std::runtime_error(std::string("png encode: ") + img.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels, 0, nullptr))
    throw std::runtime_error(std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

inline GrayImage decode_png(const Bytes& data) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, data.data(), data.size()))
    throw std::runtime_error(std::string("png decode: ") + img.message);
  img.format = PNG_FORMAT_GRAY;
  GrayImage out{static_cast<int>(img.width), static_cast<int>(img.height), Bytes(PNG_IMAGE_SIZE(img))};
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error(std::string("png decode: ") + img.message);
  }
  return out;
}

inline void write_png(const fs::path& p, const std::uint8_t* pixels, int width, int height) {
  write_file_atomic(p, encode_png(pixels, width, height));
}

inline GrayImage read_png(const fs::path& p) { return decode_png(read_file(p)); }

// ---------------------------------------------------------------------------
// FVID raw container: "FVID", u16 T, u16 H, u16 W (little-endian), u8 payload.

inline constexpr char kFvidMagic[4] = {'F', 'V', 'I', 'D'};
inline constexpr std::size_t kFvidHeader = 10;

inline Bytes encode_fvid(const Clip& c) {
  for (int d : {c.frames(), c.height(), c.width()})
    if (d > 0xffff) throw std::invalid_argument("encode_fvid: dimension exceeds u16");
  Bytes out(kFvidMagic, kFvidMagic + 4);
  for (int d : {c.frames(), c.height(), c.width()}) {
    out.push_back(static_cast<std::uint8_t>(d & 0xff));
    out.push_back(static_cast<std::uint8_t>((d >> 8) & 0xff));
  }
  const Bytes payload = to_bytes(c);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Clip decode_fvid(const Bytes& b) {
  if (b.size() < kFvidHeader || !std::equal(kFvidMagic, kFvidMagic + 4, b.begin()))
    throw std::runtime_error("decode_fvid: bad magic");
  auto u16 = [&b](std::size_t i) { return static_cast<int>(b[i] | (b[i + 1] << 8)); };
  const int t = u16(4), h = u16(6), w = u16(8);
  if (b.size() != kFvidHeader + static_cast<std::size_t>(t) * h * w) throw std::runtime_error("decode_fvid: truncated payload");
  return from_bytes(Bytes(b.begin() + kFvidHeader, b.end()), t, h, w);
}

// ---------------------------------------------------------------------------
// Clip directories

inline std::string frame_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%03d.png", t);
  return buf;
}

inline constexpr const char* kRawName = "clip.fvid";

/// Writes every frame as PNG, plus clip.fvid when `raw` is set.
inline void write_clip_dir(const fs::path& dir, const Clip& c, bool raw = false) {
  fs::create_directories(dir);
  const Bytes b = to_bytes(c);
  for (int t = 0; t < c.frames(); ++t) write_png(dir / frame_name(t), b.data() + t * c.frame_size(), c.width(), c.height());
  if (raw) write_file_atomic(dir / kRawName, encode_fvid(c));
}

/// Prefers clip.fvid; otherwise reads frame_000.png, frame_001.png, ... until one is missing.
inline Clip read_clip_dir(const fs::path& dir) {
  if (fs::exists(dir / kRawName)) return decode_fvid(read_file(dir / kRawName));
  std::vector<GrayImage> frames;
  while (fs::exists(dir / frame_name(static_cast<int>(frames.size()))))
    frames.push_back(read_png(dir / frame_name(static_cast<int>(frames.size()))));
  if (frames.empty()) throw std::runtime_error("no frames in " + dir.string());
  const int h = frames[0].height, w = frames[0].width;
  Bytes all;
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) throw std::runtime_error("inconsistent frame sizes in " + dir.string());
    all.insert(all.end(), f.pixels.begin(), f.pixels.end());
  }
  return from_bytes(all, static_cast<int>(frames.size()), h, w);
}

/// Frames 0, stride, 2*stride, ... side by side.
inline GrayImage frame_strip(const Clip& c, int stride) {
  if (stride < 1) throw std::invalid_argument("frame_strip: stride must be >= 1");
  const int panels = (c.frames() + stride - 1) / stride;
  GrayImage out{panels * c.width(), c.height(), Bytes(static_cast<std::size_t>(panels) * c.width() * c.height(), 0)};
  for (int p = 0; p < panels; ++p)
    for (int y = 0; y < c.height(); ++y)
      for (int x = 0; x < c.width(); ++x)
        out.pixels[static_cast<std::size_t>(y) * out.width + p * c.width() + x] = quantize(c.at(p * stride, y, x));
  return out;
}

}  // namespace fvid
