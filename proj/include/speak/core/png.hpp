// speak/core/png.hpp

// Copyright 2026  The SPEAK Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEAK_CORE_PNG_HPP_
#define SPEAK_CORE_PNG_HPP_

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "speak/core/errors.hpp"
#include "speak/core/tensor.hpp"

namespace speak {
namespace png {

namespace detail {

inline uint32_t be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

inline uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return uint8_t(a);
  if (pb <= pc) return uint8_t(b);
  return uint8_t(c);
}

inline std::vector<uint8_t> read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open file: " + path);
  std::fseek(f, 0, SEEK_END);
  const long sz = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> buf(static_cast<size_t>(sz));
  if (sz > 0 && std::fread(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw IoError("short read: " + path);
  }
  std::fclose(f);
  return buf;
}

inline void write_file(const std::string& path, const std::vector<uint8_t>& buf) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open file for writing: " + path);
  if (!buf.empty() && std::fwrite(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw IoError("short write: " + path);
  }
  std::fclose(f);
}

}  // namespace detail

// Decodes an 8-bit PNG (gray, gray+alpha, RGB or RGBA; no interlacing) into
// a [3,H,W] float tensor in [0,1]. Alpha is dropped, gray is replicated.
inline Tensor<float> read(const std::string& path) {
  const std::vector<uint8_t> buf = detail::read_file(path);
  static const uint8_t kSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (buf.size() < 8 || std::memcmp(buf.data(), kSig, 8) != 0)
    throw IoError("not a png file: " + path);

  uint32_t W = 0, H = 0;
  int color_type = -1;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  bool done = false;
  while (pos + 8 <= buf.size() && !done) {
    const uint32_t len = detail::be32(&buf[pos]);
    if (pos + 12 + len > buf.size()) throw IoError("truncated png chunk: " + path);
    const char* type = reinterpret_cast<const char*>(&buf[pos + 4]);
    const uint8_t* data = &buf[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("bad IHDR: " + path);
      W = detail::be32(data);
      H = detail::be32(data + 4);
      const int depth = data[8];
      color_type = data[9];
      if (depth != 8) throw IoError("unsupported png bit depth: " + path);
      if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
        throw IoError("unsupported png color type: " + path);
      if (data[10] != 0 || data[11] != 0 || data[12] != 0)
        throw IoError("unsupported png compression/filter/interlace: " + path);
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      done = true;
    }
    pos += 12 + len;
  }
  if (W == 0 || H == 0 || idat.empty()) throw IoError("png missing image data: " + path);

  const int ch = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
  const size_t stride = size_t(W) * size_t(ch);
  std::vector<uint8_t> raw((stride + 1) * H);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  const int zrc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
  if (zrc != Z_OK || raw_len != raw.size()) throw IoError("png inflate failed: " + path);

  // undo per-row filters in place
  std::vector<uint8_t> img(stride * H);
  for (uint32_t y = 0; y < H; ++y) {
    const uint8_t filter = raw[y * (stride + 1)];
    const uint8_t* src = &raw[y * (stride + 1) + 1];
    uint8_t* dst = &img[y * stride];
    const uint8_t* up = y > 0 ? &img[(y - 1) * stride] : nullptr;
    for (size_t i = 0; i < stride; ++i) {
      const int a = i >= size_t(ch) ? dst[i - ch] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= size_t(ch)) ? up[i - ch] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += detail::paeth(a, b, c); break;
        default: throw IoError("bad png filter byte: " + path);
      }
      dst[i] = uint8_t(v);
    }
  }

  Tensor<float> out = Tensor<float>::zeros({3, index_t(H), index_t(W)});
  float* po = out.data();
  const index_t HW = index_t(H) * index_t(W);
  for (uint32_t y = 0; y < H; ++y)
    for (uint32_t x = 0; x < W; ++x) {
      const uint8_t* px = &img[(size_t(y) * W + x) * ch];
      float r, g, b;
      if (ch <= 2) {
        r = g = b = px[0] / 255.0f;
      } else {
        r = px[0] / 255.0f;
        g = px[1] / 255.0f;
        b = px[2] / 255.0f;
      }
      const index_t i = index_t(y) * index_t(W) + index_t(x);
      po[i] = r;
      po[HW + i] = g;
      po[2 * HW + i] = b;
    }
  return out;
}

// Encodes a [3,H,W] tensor in [0,1] as an 8-bit RGB PNG (filter 0 rows).
inline void write(const std::string& path, const Tensor<float>& img) {
  if (img.shape.size() != 3 || img.shape[0] != 3)
    throw ShapeError("png::write expects [3,H,W], got " + shape_str(img.shape));
  const index_t H = img.shape[1], W = img.shape[2], HW = H * W;
  const size_t stride = size_t(W) * 3;
  std::vector<uint8_t> raw((stride + 1) * size_t(H));
  const float* p = img.data();
  for (index_t y = 0; y < H; ++y) {
    raw[size_t(y) * (stride + 1)] = 0;
    uint8_t* row = &raw[size_t(y) * (stride + 1) + 1];
    for (index_t x = 0; x < W; ++x) {
      for (int c = 0; c < 3; ++c) {
        float v = p[c * HW + y * W + x];
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        row[x * 3 + c] = uint8_t(v * 255.0f + 0.5f);
      }
    }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> z(bound);
  if (compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw IoError("png deflate failed: " + path);
  z.resize(bound);

  std::vector<uint8_t> out;
  out.reserve(z.size() + 64);
  static const uint8_t kSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.insert(out.end(), kSig, kSig + 8);

  auto chunk = [&out](const char* type, const std::vector<uint8_t>& data) {
    detail::put_be32(out, static_cast<uint32_t>(data.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(crc32(0, nullptr, 0), &out[start], static_cast<uInt>(4 + data.size()));
    detail::put_be32(out, static_cast<uint32_t>(crc));
  };

  std::vector<uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<uint32_t>(W));
  detail::put_be32(ihdr, static_cast<uint32_t>(H));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  chunk("IHDR", ihdr);
  chunk("IDAT", z);
  chunk("IEND", {});
  detail::write_file(path, out);
}

}  // namespace png
}  // namespace speak

#endif  // SPEAK_CORE_PNG_HPP_
