// speak/core/image.hpp

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

#ifndef SPEAK_CORE_IMAGE_HPP_
#define SPEAK_CORE_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "speak/core/errors.hpp"
#include "speak/core/png.hpp"
#include "speak/core/tensor.hpp"

namespace speak {
namespace image {

// Bilinear resize of a [C,H,W] image (align-corners-false convention).
template <class T>
Tensor<T> resize_bilinear(const Tensor<T>& img, index_t Ho, index_t Wo) {
  if (img.shape.size() != 3) throw ShapeError("resize_bilinear expects [C,H,W], got " + shape_str(img.shape));
  const index_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
  if (H == Ho && W == Wo) return img;
  Tensor<T> out = Tensor<T>::zeros({C, Ho, Wo});
  const double sy = double(H) / Ho, sx = double(W) / Wo;
  for (index_t y = 0; y < Ho; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const index_t y0 = std::min<index_t>(static_cast<index_t>(fy), H - 1);
    const index_t y1 = std::min<index_t>(y0 + 1, H - 1);
    const double wy = fy - y0;
    for (index_t x = 0; x < Wo; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const index_t x0 = std::min<index_t>(static_cast<index_t>(fx), W - 1);
      const index_t x1 = std::min<index_t>(x0 + 1, W - 1);
      const double wx = fx - x0;
      for (index_t c = 0; c < C; ++c) {
        const T* p = img.data() + c * H * W;
        const double v00 = p[y0 * W + x0], v01 = p[y0 * W + x1];
        const double v10 = p[y1 * W + x0], v11 = p[y1 * W + x1];
        out[(c * Ho + y) * Wo + x] = static_cast<T>(
            (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11));
      }
    }
  }
  return out;
}

// Crop [C,H,W] to rows [y0,y1) and cols [x0,x1).
template <class T>
Tensor<T> crop(const Tensor<T>& img, index_t y0, index_t y1, index_t x0, index_t x1) {
  if (img.shape.size() != 3) throw ShapeError("crop expects [C,H,W], got " + shape_str(img.shape));
  const index_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
  if (y0 < 0 || x0 < 0 || y1 > H || x1 > W || y0 >= y1 || x0 >= x1)
    throw ShapeError("crop: bad window on " + shape_str(img.shape));
  Tensor<T> out = Tensor<T>::zeros({C, y1 - y0, x1 - x0});
  for (index_t c = 0; c < C; ++c)
    for (index_t y = y0; y < y1; ++y)
      std::copy(img.data() + (c * H + y) * W + x0, img.data() + (c * H + y) * W + x1,
                out.data() + (c * (y1 - y0) + (y - y0)) * (x1 - x0));
  return out;
}

// Stack [C,H,W] images into one [N,C,H,W] batch.
template <class T>
Tensor<T> stack(const std::vector<Tensor<T>>& imgs) {
  if (imgs.empty()) throw ShapeError("stack: empty input");
  const Shape& s = imgs[0].shape;
  Tensor<T> out = Tensor<T>::zeros({index_t(imgs.size()), s[0], s[1], s[2]});
  const index_t n = imgs[0].numel();
  for (size_t i = 0; i < imgs.size(); ++i) {
    if (imgs[i].shape != s) throw ShapeError("stack: shape mismatch");
    std::copy(imgs[i].data(), imgs[i].data() + n, out.data() + index_t(i) * n);
  }
  return out;
}

// Extract image i of an [N,C,H,W] batch as [C,H,W].
template <class T>
Tensor<T> unstack(const Tensor<T>& batch, index_t i) {
  if (batch.shape.size() != 4) throw ShapeError("unstack expects [N,C,H,W], got " + shape_str(batch.shape));
  const index_t n = batch.shape[1] * batch.shape[2] * batch.shape[3];
  Tensor<T> out = Tensor<T>::zeros({batch.shape[1], batch.shape[2], batch.shape[3]});
  std::copy(batch.data() + i * n, batch.data() + (i + 1) * n, out.data());
  return out;
}

inline std::string frame_name(index_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", static_cast<int>(i));
  return buf;
}

// Loads frame_00000.png, frame_00001.png, ... until the sequence stops.
inline std::vector<Tensor<float>> load_frame_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<Tensor<float>> frames;
  for (index_t i = 0;; ++i) {
    const fs::path p = fs::path(dir) / frame_name(i);
    if (!fs::exists(p)) break;
    frames.push_back(png::read(p.string()));
  }
  if (frames.empty()) throw IoError("no frame_00000.png found in: " + dir);
  return frames;
}

inline void save_frame_dir(const std::string& dir, const std::vector<Tensor<float>>& frames) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (size_t i = 0; i < frames.size(); ++i)
    png::write((fs::path(dir) / frame_name(index_t(i))).string(), frames[i]);
}

}  // namespace image
}  // namespace speak

#endif  // SPEAK_CORE_IMAGE_HPP_
