// speak/core/wav.hpp

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

#ifndef SPEAK_CORE_WAV_HPP_
#define SPEAK_CORE_WAV_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "speak/core/errors.hpp"

namespace speak {
namespace wav {

struct Audio {
  std::vector<float> samples;  // mono
  int sample_rate = 0;
};

namespace detail {

inline uint32_t le32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}
inline uint16_t le16(const uint8_t* p) { return uint16_t(p[0]) | (uint16_t(p[1]) << 8); }

inline void put_le32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 24));
}
inline void put_le16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
}

}  // namespace detail

// Reads a RIFF/WAVE file with PCM16 or float32 samples. Multi-channel input
// is averaged down to mono.
inline Audio read(const std::string& path) {
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

  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(&buf[8], "WAVE", 4) != 0)
    throw IoError("not a wav file: " + path);

  int fmt = 0, channels = 0, rate = 0, bits = 0;
  const uint8_t* data = nullptr;
  size_t data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const uint32_t len = detail::le32(&buf[pos + 4]);
    if (pos + 8 + len > buf.size()) throw IoError("truncated wav chunk: " + path);
    if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
      if (len < 16) throw IoError("bad wav fmt chunk: " + path);
      fmt = detail::le16(&buf[pos + 8]);
      channels = detail::le16(&buf[pos + 10]);
      rate = static_cast<int>(detail::le32(&buf[pos + 12]));
      bits = detail::le16(&buf[pos + 22]);
    } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
      data = &buf[pos + 8];
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word aligned
  }
  if (!data || channels <= 0 || rate <= 0) throw IoError("wav missing fmt or data: " + path);

  size_t n = 0;
  Audio out;
  out.sample_rate = rate;
  if (fmt == 1 && bits == 16) {
    n = data_len / (2 * size_t(channels));
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float acc = 0;
      for (int c = 0; c < channels; ++c) {
        const int16_t s = static_cast<int16_t>(detail::le16(data + (i * channels + c) * 2));
        acc += s / 32768.0f;
      }
      out.samples[i] = acc / channels;
    }
  } else if (fmt == 3 && bits == 32) {
    n = data_len / (4 * size_t(channels));
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float acc = 0;
      for (int c = 0; c < channels; ++c) {
        uint32_t u = detail::le32(data + (i * channels + c) * 4);
        float v;
        std::memcpy(&v, &u, 4);
        acc += v;
      }
      out.samples[i] = acc / channels;
    }
  } else {
    throw IoError("unsupported wav format (want pcm16 or float32): " + path);
  }
  return out;
}

// Writes mono PCM16.
inline void write(const std::string& path, const std::vector<float>& samples, int sample_rate) {
  std::vector<uint8_t> out;
  out.reserve(44 + samples.size() * 2);
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_le32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  detail::put_le32(out, 16);
  detail::put_le16(out, 1);  // PCM
  detail::put_le16(out, 1);  // mono
  detail::put_le32(out, static_cast<uint32_t>(sample_rate));
  detail::put_le32(out, static_cast<uint32_t>(sample_rate * 2));
  detail::put_le16(out, 2);
  detail::put_le16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_le32(out, data_len);
  for (float v : samples) {
    long s = std::lrint(double(v) * 32768.0);
    if (s > 32767) s = 32767;
    if (s < -32768) s = -32768;
    detail::put_le16(out, static_cast<uint16_t>(static_cast<int16_t>(s)));
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open file for writing: " + path);
  if (std::fwrite(out.data(), 1, out.size(), f) != out.size()) {
    std::fclose(f);
    throw IoError("short write: " + path);
  }
  std::fclose(f);
}

// Linear resampling to a target rate.
inline std::vector<float> resample(const std::vector<float>& x, int from_rate, int to_rate) {
  if (from_rate == to_rate || x.empty()) return x;
  const size_t n_out = static_cast<size_t>(std::lround(double(x.size()) * to_rate / from_rate));
  std::vector<float> y(n_out);
  const double step = double(from_rate) / to_rate;
  for (size_t i = 0; i < n_out; ++i) {
    const double t = i * step;
    const size_t i0 = static_cast<size_t>(t);
    const double frac = t - i0;
    const float a = i0 < x.size() ? x[i0] : x.back();
    const float b = i0 + 1 < x.size() ? x[i0 + 1] : x.back();
    y[i] = static_cast<float>(a * (1.0 - frac) + b * frac);
  }
  return y;
}

}  // namespace wav
}  // namespace speak

#endif  // SPEAK_CORE_WAV_HPP_
