// speak/synthface/landmarks.hpp

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

#ifndef SPEAK_SYNTHFACE_LANDMARKS_HPP_
#define SPEAK_SYNTHFACE_LANDMARKS_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "speak/synthface/scene.hpp"

namespace speak {
namespace synthface {

// Produces the 12-point layout documented in scene.hpp for a single [3,H,W]
// frame. Implementations must return a best-effort estimate rather than
// throw when a face is hard to find.
class LandmarkProvider {
 public:
  virtual ~LandmarkProvider() = default;
  virtual Tensor<float> detect(const Tensor<float>& frame) const = 0;  // [12,2]

  Tensor<float> detect_video(const Tensor<float>& frames) const {
    if (frames.shape.size() != 4) throw ShapeError("detect_video expects [T,3,H,W]");
    const index_t T = frames.shape[0], n = frames.shape[1] * frames.shape[2] * frames.shape[3];
    Tensor<float> out = Tensor<float>::zeros({T, kNumLandmarks, 2});
    for (index_t t = 0; t < T; ++t) {
      Tensor<float> f({frames.shape[1], frames.shape[2], frames.shape[3]},
                      std::make_shared<std::vector<float>>(
                          frames.data() + t * n, frames.data() + (t + 1) * n));
      Tensor<float> lm = detect(f);
      std::copy(lm.data(), lm.data() + kNumLandmarks * 2, out.data() + t * kNumLandmarks * 2);
    }
    return out;
  }
};

namespace lmdetail {

struct Blob {
  double cx = 0, cy = 0;
  double area = 0;
  double sxx = 0, sxy = 0, syy = 0;  // centered second moments
  bool touches_border = false;
  std::vector<int32_t> pixels;       // flattened y*W+x

  // ratio of minor to major covariance eigenvalue; 1 = round, 0 = a line
  double roundness() const {
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    const double l1 = tr / 2 + disc, l2 = tr / 2 - disc;
    return l1 > 1e-12 ? std::max(0.0, l2) / l1 : 1.0;
  }

  double major_angle() const { return 0.5 * std::atan2(2 * sxy, sxx - syy); }
};

inline void finish_blob(Blob& b, index_t W) {
  double sx = 0, sy = 0;
  for (int32_t p : b.pixels) {
    sx += p % W;
    sy += p / W;
  }
  b.area = static_cast<double>(b.pixels.size());
  b.cx = sx / b.area;
  b.cy = sy / b.area;
  for (int32_t p : b.pixels) {
    const double dx = p % W - b.cx, dy = p / W - b.cy;
    b.sxx += dx * dx;
    b.sxy += dx * dy;
    b.syy += dy * dy;
  }
  b.sxx /= b.area;
  b.sxy /= b.area;
  b.syy /= b.area;
}

inline std::vector<Blob> components(const std::vector<uint8_t>& cls, uint8_t want, index_t H, index_t W) {
  std::vector<Blob> out;
  std::vector<uint8_t> seen(cls.size(), 0);
  std::vector<int32_t> stack;
  for (index_t start = 0; start < H * W; ++start) {
    if (cls[static_cast<size_t>(start)] != want || seen[static_cast<size_t>(start)]) continue;
    Blob b;
    stack.assign(1, static_cast<int32_t>(start));
    seen[static_cast<size_t>(start)] = 1;
    while (!stack.empty()) {
      const int32_t p = stack.back();
      stack.pop_back();
      b.pixels.push_back(p);
      const index_t y = p / W, x = p % W;
      if (y == 0 || y == H - 1 || x == 0 || x == W - 1) b.touches_border = true;
      // 8-connectivity, or thin diagonal strokes fall apart into specks
      const index_t nb[8][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1},
                                {y - 1, x - 1}, {y - 1, x + 1}, {y + 1, x - 1}, {y + 1, x + 1}};
      for (auto& [ny, nx] : nb) {
        if (ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
        const index_t q = ny * W + nx;
        if (!seen[static_cast<size_t>(q)] && cls[static_cast<size_t>(q)] == want) {
          seen[static_cast<size_t>(q)] = 1;
          stack.push_back(static_cast<int32_t>(q));
        }
      }
    }
    finish_blob(b, W);
    out.push_back(std::move(b));
  }
  return out;
}

struct Pt {
  double x = 0, y = 0;
};

// Mean position of the pixels whose projection onto dir lies within `band`
// of the extreme. sign=+1 takes the maximum end, -1 the minimum end.
inline Pt extreme_mean(const std::vector<int32_t>& pixels, index_t W, double dirx, double diry,
                       int sign, double band = 0.75) {
  double best = -1e30;
  for (int32_t p : pixels) {
    const double proj = sign * (dirx * (p % W) + diry * (p / W));
    best = std::max(best, proj);
  }
  double sx = 0, sy = 0, n = 0;
  for (int32_t p : pixels) {
    const double proj = sign * (dirx * (p % W) + diry * (p / W));
    if (proj >= best - band) {
      sx += p % W;
      sy += p / W;
      n += 1;
    }
  }
  return {sx / n, sy / n};
}

}  // namespace lmdetail

// Color-rule detector for the procedural renderer's palette. Works on clean
// renders and on generated approximations of them; falls back to the image
// center for parts it cannot find.
class SyntheticPixelProvider : public LandmarkProvider {
 public:
  Tensor<float> detect(const Tensor<float>& frame) const override {
    using lmdetail::Blob;
    using lmdetail::Pt;
    if (frame.shape.size() != 3 || frame.shape[0] != 3)
      throw ShapeError("detect expects [3,H,W], got " + shape_str(frame.shape));
    const index_t H = frame.shape[1], W = frame.shape[2], HW = H * W;
    const float* R = frame.data();
    const float* G = frame.data() + HW;
    const float* B = frame.data() + 2 * HW;

    // 0 none, 1 face, 2 dark feature, 3 mouth. The green/blue caps on the
    // mouth rule matter on reddish skin, where the antialiased rim of a dark
    // stroke is itself red enough to pass a bare redness test.
    std::vector<uint8_t> cls(static_cast<size_t>(HW), 0);
    for (index_t i = 0; i < HW; ++i) {
      const double r = R[i], g = G[i], b = B[i];
      const double lum = 0.2126 * r + 0.7152 * g + 0.0722 * b;
      const double redness = r - std::max(g, b);
      if (redness > 0.10 && lum < 0.35 && g < 0.17 && b < 0.20) cls[static_cast<size_t>(i)] = 3;
      else if (lum < 0.28) cls[static_cast<size_t>(i)] = 2;
      else if (lum > 0.37) cls[static_cast<size_t>(i)] = 1;
    }

    auto faces = lmdetail::components(cls, 1, H, W);
    auto darks = lmdetail::components(cls, 2, H, W);
    auto mouths = lmdetail::components(cls, 3, H, W);

    const double cx0 = (W - 1) / 2.0, cy0 = (H - 1) / 2.0;
    Tensor<float> out = Tensor<float>::full({kNumLandmarks, 2}, 0.0f);
    for (index_t i = 0; i < kNumLandmarks; ++i) {
      out[i * 2 + 0] = static_cast<float>(cx0);
      out[i * 2 + 1] = static_cast<float>(cy0);
    }

    const Blob* face = nullptr;
    for (const auto& b : faces)
      if (b.area >= 0.02 * HW && (!face || b.area > face->area)) face = &b;
    const double fx = face ? face->cx : cx0;
    const double fy = face ? face->cy : cy0;

    // the mouth is the largest red blob in the lower half of the face
    const Blob* mouth = nullptr;
    for (const auto& b : mouths) {
      if (b.touches_border || b.area < 3) continue;
      if (b.cy > fy && (!mouth || b.area > mouth->area)) mouth = &b;
    }
    if (!mouth)
      for (const auto& b : mouths)
        if (!b.touches_border && b.area >= 3 && (!mouth || b.area > mouth->area)) mouth = &b;

    // eyes are round dark blobs, brows elongated ones; background is the
    // big dark component touching the border
    // Eyes and brows lie above the face centroid at any admissible pose;
    // dark fragments further down are rim artifacts around the mouth.
    std::vector<const Blob*> parts;
    for (const auto& b : darks) {
      if (b.touches_border || b.area < 2) continue;
      if (b.cy - fy > 0.03 * H) continue;
      parts.push_back(&b);
    }

    // Antialiasing can break a thin stroke into fragments whenever one
    // marginal pixel lands on the wrong side of the luminance cut, so
    // single-linkage cluster the fragments back together. Distinct features
    // are laid out further apart than this radius.
    const double merge_r = 0.0625 * std::min(H, W);
    std::vector<int> group(parts.size());
    for (size_t i = 0; i < parts.size(); ++i) group[i] = static_cast<int>(i);
    auto root = [&](int i) {
      while (group[static_cast<size_t>(i)] != i) i = group[static_cast<size_t>(i)];
      return i;
    };
    for (size_t i = 0; i < parts.size(); ++i)
      for (size_t j = i + 1; j < parts.size(); ++j)
        if (std::hypot(parts[i]->cx - parts[j]->cx, parts[i]->cy - parts[j]->cy) < merge_r)
          group[static_cast<size_t>(root(static_cast<int>(i)))] = root(static_cast<int>(j));
    std::vector<Blob> merged;
    for (size_t i = 0; i < parts.size(); ++i) {
      if (root(static_cast<int>(i)) != static_cast<int>(i)) continue;
      Blob m;
      for (size_t j = 0; j < parts.size(); ++j)
        if (root(static_cast<int>(j)) == static_cast<int>(i)) {
          m.pixels.insert(m.pixels.end(), parts[j]->pixels.begin(), parts[j]->pixels.end());
          m.touches_border = m.touches_border || parts[j]->touches_border;
        }
      lmdetail::finish_blob(m, W);
      merged.push_back(std::move(m));
    }

    std::vector<const Blob*> cand;
    for (const auto& b : merged) cand.push_back(&b);

    // Mouth orientation, when the stroke is clearly elongated, anchors the
    // face-frame axes.
    double mux = 1.0, muy = 0.0;
    bool have_mouth_axis = false;
    if (mouth && mouth->roundness() < 0.5) {
      const double ang = mouth->major_angle();
      mux = std::cos(ang);
      muy = std::sin(ang);
      if (mux < 0) {
        mux = -mux;
        muy = -muy;
      }
      have_mouth_axis = true;
    }

    // Pick the eye pair by scoring every candidate pair against what the
    // face layout guarantees: head roll is bounded, so the eye line is never
    // steep; it runs parallel to the mouth; eyes are rounder than brows; the
    // brows end up above the eye line; and the pair straddles the midline.
    std::vector<const Blob*> eyes, brows;
    double best_score = -1e18;
    size_t best_i = 0, best_j = 0;
    for (size_t i = 0; i < cand.size(); ++i)
      for (size_t j = i + 1; j < cand.size(); ++j) {
        double dx = cand[j]->cx - cand[i]->cx, dy = cand[j]->cy - cand[i]->cy;
        const double gap = std::hypot(dx, dy);
        if (gap < 0.04 * W || gap > 0.4 * W) continue;
        dx /= gap;
        dy /= gap;
        if (dx < 0) {
          dx = -dx;
          dy = -dy;
        }
        if (std::abs(dy) > 0.643) continue;  // steeper than any admissible roll
        const double px = -dy, py = dx;
        double score = cand[i]->roundness() + cand[j]->roundness();
        if (have_mouth_axis) score += 2.0 * std::abs(dx * mux + dy * muy);
        const double mx = 0.5 * (cand[i]->cx + cand[j]->cx);
        const double my = 0.5 * (cand[i]->cy + cand[j]->cy);
        for (size_t k = 0; k < cand.size(); ++k) {
          if (k == i || k == j) continue;
          const double dv = px * (cand[k]->cx - mx) + py * (cand[k]->cy - my);
          if (dv < -1.5) score += 1.0;       // a brow above the eye line
          else if (dv > 1.5) score -= 2.0;   // something below it: wrong pair
        }
        score += 1.0 - std::min(1.0, std::abs(dx * (mx - fx) + dy * (my - fy)) / (0.15 * W));
        if (score > best_score) {
          best_score = score;
          best_i = i;
          best_j = j;
        }
      }

    double ux = 1.0, uy = 0.0;
    if (have_mouth_axis) {
      ux = mux;
      uy = muy;
    }
    if (best_score > -1e18) {
      eyes = {cand[best_i], cand[best_j]};
      const double dx = eyes[1]->cx - eyes[0]->cx, dy = eyes[1]->cy - eyes[0]->cy;
      const double n = std::hypot(dx, dy);
      ux = dx / n;
      uy = dy / n;
      if (ux < 0) {
        ux = -ux;
        uy = -uy;
      }
      // brows: candidates above the eye line, keeping the two highest
      const double mx = 0.5 * (eyes[0]->cx + eyes[1]->cx);
      const double my = 0.5 * (eyes[0]->cy + eyes[1]->cy);
      auto above = [&](const Blob* b) { return -uy * (b->cx - mx) + ux * (b->cy - my); };
      for (size_t k = 0; k < cand.size(); ++k)
        if (k != best_i && k != best_j && above(cand[k]) < -1.0) brows.push_back(cand[k]);
      std::sort(brows.begin(), brows.end(),
                [&](const Blob* a, const Blob* b) { return above(a) < above(b); });
      if (brows.size() > 2) brows.resize(2);
    } else {
      for (const Blob* b : cand) (b->roundness() >= 0.35 ? eyes : brows).push_back(b);
      if (eyes.size() > 2) eyes.resize(2);
      if (brows.size() > 2) brows.resize(2);
    }
    if (eyes.size() == 2 && eyes[0]->cx > eyes[1]->cx) std::swap(eyes[0], eyes[1]);
    if (brows.size() == 2 && brows[0]->cx > brows[1]->cx) std::swap(brows[0], brows[1]);
    const double vx = -uy, vy = ux;

    auto put = [&](index_t i, Pt p) {
      out[i * 2 + 0] = static_cast<float>(p.x);
      out[i * 2 + 1] = static_cast<float>(p.y);
    };

    double outline_halfspan = 0;
    if (face) {
      const Pt o10 = lmdetail::extreme_mean(face->pixels, W, ux, uy, -1);
      const Pt o11 = lmdetail::extreme_mean(face->pixels, W, ux, uy, +1);
      put(10, o10);
      put(11, o11);
      outline_halfspan = 0.5 * std::hypot(o11.x - o10.x, o11.y - o10.y);
    }

    if (mouth) {
      // central strip, then extremes along v
      std::vector<int32_t> strip;
      for (int32_t p : mouth->pixels) {
        const double du = ux * (p % W - mouth->cx) + uy * (p / W - mouth->cy);
        if (std::abs(du) <= 1.0) strip.push_back(p);
      }
      double hm_px = 0;
      if (!strip.empty()) {
        const Pt top = lmdetail::extreme_mean(strip, W, vx, vy, -1);
        const Pt bot = lmdetail::extreme_mean(strip, W, vx, vy, +1);
        put(2, top);
        put(3, bot);
        hm_px = 0.5 * std::hypot(bot.x - top.x, bot.y - top.y);
      }

      const Pt c0 = lmdetail::extreme_mean(mouth->pixels, W, ux, uy, -1);
      const Pt c1 = lmdetail::extreme_mean(mouth->pixels, W, ux, uy, +1);
      const Pt mid{0.5 * (c0.x + c1.x), 0.5 * (c0.y + c1.y)};
      // A nearly closed mouth thins below the color rule well before its
      // true corner, so the visible extent is a poor estimate of the real
      // one. The face outline is stable, and lips span a fixed fraction of
      // it, so use that scale instead once the stroke gets thin.
      double half_w = std::max(
          std::abs(ux * (c0.x - mid.x) + uy * (c0.y - mid.y)),
          std::abs(ux * (c1.x - mid.x) + uy * (c1.y - mid.y)));
      if (hm_px < 2.0 && outline_halfspan > 0)
        half_w = std::max(half_w, 0.4333 * outline_halfspan + 0.3);
      auto corner = [&](const Pt& p, int sgn) {
        // The centerline bends quadratically toward the corners, so scale the
        // visible end's height offset by how far short of the corner it sits.
        const double dv = vx * (p.x - mid.x) + vy * (p.y - mid.y);
        const double uvis = std::abs(ux * (p.x - mid.x) + uy * (p.y - mid.y)) / std::max(half_w, 1.0);
        const double dvc = dv * std::min(uvis > 1e-3 ? 1.0 / (uvis * uvis) : 1.0, 4.0);
        return Pt{mid.x + sgn * half_w * ux + dvc * vx, mid.y + sgn * half_w * uy + dvc * vy};
      };
      put(0, corner(c0, -1));
      put(1, corner(c1, +1));
    }

    for (size_t e = 0; e < eyes.size(); ++e) {
      const double r = std::sqrt(eyes[e]->area / M_PI);
      const Pt c{eyes[e]->cx, eyes[e]->cy};
      if (eyes.size() == 2 ? e == 0 : eyes[e]->cx < fx) {
        put(4, {c.x - r * ux, c.y - r * uy});
        put(5, {c.x + r * ux, c.y + r * uy});
      } else {
        put(6, {c.x - r * ux, c.y - r * uy});
        put(7, {c.x + r * ux, c.y + r * uy});
      }
    }

    // Brows sit one per side, but at small eye spacings their inner ends can
    // fuse into a single component spanning the face midline; that one blob
    // then provides both outer ends.
    bool got_left = false, got_right = false;
    for (const Blob* b : brows) {
      double umin = 1e30, umax = -1e30;
      for (int32_t p : b->pixels) {
        const double u = ux * (p % W - fx) + uy * (p / W - fy);
        umin = std::min(umin, u);
        umax = std::max(umax, u);
      }
      const bool spans = umin < -1.5 && umax > 1.5;
      const double side = ux * (b->cx - fx) + uy * (b->cy - fy);
      if ((spans || side < 0) && !got_left) {
        put(8, lmdetail::extreme_mean(b->pixels, W, ux, uy, -1));
        got_left = true;
      }
      if ((spans || side >= 0) && !got_right) {
        put(9, lmdetail::extreme_mean(b->pixels, W, ux, uy, +1));
        got_right = true;
      }
    }

    return out;
  }
};

// Reads landmarks straight off the generating parameters. Only valid for
// samples that carry a scene.
class AnalyticProvider {
 public:
  static Tensor<float> landmarks(const SynthScene& scene, index_t size) {
    validate_scene(scene);
    const index_t T = static_cast<index_t>(scene.openness.size());
    Tensor<float> out = Tensor<float>::zeros({T, kNumLandmarks, 2});
    for (index_t t = 0; t < T; ++t)
      scene_landmarks(scene, t, size, out.data() + t * kNumLandmarks * 2);
    return out;
  }
};

}  // namespace synthface
}  // namespace speak

#endif  // SPEAK_SYNTHFACE_LANDMARKS_HPP_
