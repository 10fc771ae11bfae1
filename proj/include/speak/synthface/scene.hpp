// speak/synthface/scene.hpp

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

#ifndef SPEAK_SYNTHFACE_SCENE_HPP_
#define SPEAK_SYNTHFACE_SCENE_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "speak/core/errors.hpp"
#include "speak/core/rng.hpp"
#include "speak/core/tensor.hpp"

namespace speak {
namespace synthface {

inline constexpr int kFps = 25;
inline constexpr int kSampleRate = 16000;
inline constexpr int kSamplesPerFrame = kSampleRate / kFps;  // 640

// Landmark layout (x,y pixel coordinates, origin at the center of the
// top-left pixel):
//   0 mouth left corner    1 mouth right corner
//   2 mouth top center     3 mouth bottom center
//   4 left eye outer       5 left eye inner
//   6 right eye inner      7 right eye outer
//   8 left brow outer end  9 right brow outer end
//  10 face outline left   11 face outline right
inline constexpr index_t kNumLandmarks = 12;
inline constexpr index_t kMouthLandmarkBegin = 0;
inline constexpr index_t kMouthLandmarkEnd = 4;

struct Identity {
  float hue = 0.0f;          // [0,1]
  float face_width = 0.8f;   // [0.6,1.0]
  float eye_spacing = 0.35f; // [0.2,0.5]
};

struct Pose {
  float theta_deg = 0.0f;  // [-30,30]
  float tx = 0.0f;         // [-0.15,0.15], units of image size
  float ty = 0.0f;         // [-0.15,0.15]
};

struct Emotion {
  float mouth_curve = 0.0f;  // [-1,1]
  float brow_tilt = 0.0f;    // [-1,1]
};

struct SynthScene {
  Identity identity;
  Pose pose;
  Emotion emotion;
  std::vector<float> openness;  // one value per frame, [0,1]
  int fps = kFps;
};

struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  int fps = kFps;
};

struct VideoSample {
  Tensor<float> frames;     // [T,3,H,W] in [0,1]
  AudioClip audio;
  Tensor<float> landmarks;  // [T,12,2] when present
  std::optional<SynthScene> scene;

  index_t num_frames() const { return frames.defined() ? frames.shape[0] : 0; }
  bool has_landmarks() const { return landmarks.defined(); }
};

namespace detail {

inline void check_range(float v, float lo, float hi, const char* field) {
  if (!(v >= lo && v <= hi))
    throw ValidationError(std::string(field) + " = " + std::to_string(v) + " outside [" +
                          std::to_string(lo) + "," + std::to_string(hi) + "]");
}

}  // namespace detail

inline void validate_scene(const SynthScene& s) {
  detail::check_range(s.identity.hue, 0.0f, 1.0f, "identity.hue");
  detail::check_range(s.identity.face_width, 0.6f, 1.0f, "identity.face_width");
  detail::check_range(s.identity.eye_spacing, 0.2f, 0.5f, "identity.eye_spacing");
  detail::check_range(s.pose.theta_deg, -30.0f, 30.0f, "pose.theta_deg");
  detail::check_range(s.pose.tx, -0.15f, 0.15f, "pose.tx");
  detail::check_range(s.pose.ty, -0.15f, 0.15f, "pose.ty");
  detail::check_range(s.emotion.mouth_curve, -1.0f, 1.0f, "emotion.mouth_curve");
  detail::check_range(s.emotion.brow_tilt, -1.0f, 1.0f, "emotion.brow_tilt");
  if (s.fps != kFps) throw ValidationError("fps must be " + std::to_string(kFps));
  if (s.openness.empty()) throw ValidationError("speech.openness must not be empty");
  for (size_t t = 0; t < s.openness.size(); ++t)
    detail::check_range(s.openness[t], 0.0f, 1.0f, "speech.openness");
}

// ---------------------------------------------------------------------------
// canonical face geometry (units of image size, origin at image center,
// y pointing down, before the pose transform)

namespace geom {

// Feature placement keeps a slack of at least two pixels (at a 64px render)
// between features, and between any feature and the face outline, across the
// whole admissible parameter box. Without that slack, antialiased strokes
// bleed into one another and pixel-level detection cannot tell them apart.
inline constexpr double kFaceB = 0.30;          // vertical semi-axis
inline constexpr double kEyeY = -0.085;
inline constexpr double kEyeRadius = 0.022;
inline constexpr double kBrowY = -0.165;
inline constexpr double kBrowHalfLen = 0.045;  // scaled by face_width, like all x extents
inline constexpr double kBrowThick = 0.014;
inline constexpr double kBrowTiltMax = 14.0 * M_PI / 180.0;
inline constexpr double kMouthY = 0.17;
inline constexpr double kMouthCurve = 0.045;
inline constexpr double kMouthMinHalf = 0.016;
inline constexpr double kMouthOpenHalf = 0.065;

inline double face_a(const Identity& id) { return 0.30 * id.face_width; }
inline double eye_x(const Identity& id) { return id.face_width * (0.05 + 0.18 * id.eye_spacing); }
inline double mouth_halfwidth(const Identity& id) { return 0.13 * id.face_width; }
inline double mouth_halfheight(double openness) { return kMouthMinHalf + kMouthOpenHalf * openness; }

// vertical center of the lips as a function of x
inline double mouth_centerline(const Identity& id, const Emotion& em, double x) {
  const double w = mouth_halfwidth(id);
  const double u = x / w;
  return kMouthY + em.mouth_curve * kMouthCurve * (u * u - 0.5);
}

struct BrowSeg {
  double x0, y0, x1, y1;  // inner -> outer endpoint
};

// side = -1 for the left brow, +1 for the right
inline BrowSeg brow(const Identity& id, const Emotion& em, int side) {
  const double phi = em.brow_tilt * kBrowTiltMax;
  const double cx = side * eye_x(id);
  const double dx = kBrowHalfLen * id.face_width * std::cos(phi);
  const double dy = kBrowHalfLen * id.face_width * std::sin(phi);
  BrowSeg s;
  s.x0 = cx - side * dx;
  s.y0 = kBrowY + dy;
  s.x1 = cx + side * dx;
  s.y1 = kBrowY - dy;
  return s;
}

}  // namespace geom

// Analytic landmark positions for one frame, in pixel coordinates of a
// size x size render.
inline void scene_landmarks(const SynthScene& s, index_t t, index_t size, float* out /* [12,2] */) {
  const Identity& id = s.identity;
  const Emotion& em = s.emotion;
  const double o = s.openness[static_cast<size_t>(t)];

  const double a = geom::face_a(id);
  const double xe = geom::eye_x(id);
  const double wm = geom::mouth_halfwidth(id);
  const double hm = geom::mouth_halfheight(o);
  const double corner_y = geom::mouth_centerline(id, em, wm);
  const double center_y = geom::mouth_centerline(id, em, 0.0);
  const geom::BrowSeg bl = geom::brow(id, em, -1);
  const geom::BrowSeg br = geom::brow(id, em, +1);

  const double pts[kNumLandmarks][2] = {
      {-wm, corner_y},                      // 0 mouth left corner
      {wm, corner_y},                       // 1 mouth right corner
      {0.0, center_y - hm},                 // 2 mouth top center
      {0.0, center_y + hm},                 // 3 mouth bottom center
      {-xe - geom::kEyeRadius, geom::kEyeY},// 4 left eye outer
      {-xe + geom::kEyeRadius, geom::kEyeY},// 5 left eye inner
      {xe - geom::kEyeRadius, geom::kEyeY}, // 6 right eye inner
      {xe + geom::kEyeRadius, geom::kEyeY}, // 7 right eye outer
      {bl.x1, bl.y1},                       // 8 left brow outer end
      {br.x1, br.y1},                       // 9 right brow outer end
      {-a, 0.0},                            // 10 face outline left
      {a, 0.0},                             // 11 face outline right
  };

  const double th = s.pose.theta_deg * M_PI / 180.0;
  const double c = std::cos(th), sn = std::sin(th);
  for (index_t i = 0; i < kNumLandmarks; ++i) {
    const double x = pts[i][0], y = pts[i][1];
    const double xr = c * x - sn * y + s.pose.tx;
    const double yr = sn * x + c * y + s.pose.ty;
    out[i * 2 + 0] = static_cast<float>((xr + 0.5) * size - 0.5);
    out[i * 2 + 1] = static_cast<float>((yr + 0.5) * size - 0.5);
  }
}

namespace detail {

inline void hsv_to_rgb(double h, double s, double v, double* rgb) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

inline double dist_to_segment(double px, double py, const geom::BrowSeg& s) {
  const double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
  const double wx = px - s.x0, wy = py - s.y0;
  const double len2 = vx * vx + vy * vy;
  double tt = len2 > 0 ? (wx * vx + wy * vy) / len2 : 0.0;
  tt = tt < 0 ? 0 : (tt > 1 ? 1 : tt);
  const double dx = px - (s.x0 + tt * vx), dy = py - (s.y0 + tt * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace detail

// Rasterizes one frame with 4x4 supersampling into dst[3*size*size].
inline void render_frame(const SynthScene& s, index_t t, index_t size, float* dst) {
  const Identity& id = s.identity;
  const Emotion& em = s.emotion;
  const double o = s.openness[static_cast<size_t>(t)];

  const double a = geom::face_a(id);
  const double b = geom::kFaceB;
  const double xe = geom::eye_x(id);
  const double wm = geom::mouth_halfwidth(id);
  const double hm = geom::mouth_halfheight(o);
  const geom::BrowSeg brows[2] = {geom::brow(id, em, -1), geom::brow(id, em, +1)};

  double face_rgb[3];
  detail::hsv_to_rgb(id.hue, 0.55, 0.85, face_rgb);
  const double bg_rgb[3] = {0.12, 0.12, 0.12};
  const double dark_rgb[3] = {0.05, 0.05, 0.05};
  const double mouth_rgb[3] = {0.45, 0.06, 0.10};

  const double th = s.pose.theta_deg * M_PI / 180.0;
  const double c = std::cos(th), sn = std::sin(th);
  const index_t HW = size * size;
  const double inv = 1.0 / static_cast<double>(size);

  for (index_t py = 0; py < size; ++py) {
    for (index_t px = 0; px < size; ++px) {
      double acc[3] = {0, 0, 0};
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          const double qx = (px + (sx + 0.5) / 4.0) * inv - 0.5 - s.pose.tx;
          const double qy = (py + (sy + 0.5) / 4.0) * inv - 0.5 - s.pose.ty;
          // inverse rotation into the canonical face frame
          const double x = c * qx + sn * qy;
          const double y = -sn * qx + c * qy;

          const double* col = bg_rgb;
          const double ex = (x / a), ey = (y / b);
          if (ex * ex + ey * ey <= 1.0) {
            col = face_rgb;
            // mouth
            if (std::abs(x) <= wm) {
              const double cy = geom::mouth_centerline(id, em, x);
              const double u = x / wm;
              const double lens = std::sqrt(std::max(0.0, 1.0 - u * u));
              if (std::abs(y - cy) <= hm * lens) col = mouth_rgb;
            }
            if (col == face_rgb) {
              // eyes
              const double dl = std::hypot(x + xe, y - geom::kEyeY);
              const double dr = std::hypot(x - xe, y - geom::kEyeY);
              if (dl <= geom::kEyeRadius || dr <= geom::kEyeRadius) {
                col = dark_rgb;
              } else if (detail::dist_to_segment(x, y, brows[0]) <= geom::kBrowThick ||
                         detail::dist_to_segment(x, y, brows[1]) <= geom::kBrowThick) {
                col = dark_rgb;
              }
            }
          }
          acc[0] += col[0];
          acc[1] += col[1];
          acc[2] += col[2];
        }
      }
      const index_t i = py * size + px;
      dst[i] = static_cast<float>(acc[0] / 16.0);
      dst[HW + i] = static_cast<float>(acc[1] / 16.0);
      dst[2 * HW + i] = static_cast<float>(acc[2] / 16.0);
    }
  }
}

// Sinusoid mixture amplitude-modulated per frame so that the frame RMS is
// 0.4 * openness. The 0.4 keeps samples inside [-1,1]; correlation with the
// openness envelope is unchanged by the constant.
inline constexpr double kRmsPerOpenness = 0.4;

inline AudioClip synth_audio(const std::vector<float>& openness) {
  AudioClip clip;
  clip.samples.resize(openness.size() * kSamplesPerFrame);
  const double f[3] = {220.0, 440.0, 880.0};
  const double w[3] = {0.5, 0.3, 0.2};
  for (size_t t = 0; t < openness.size(); ++t) {
    double sumsq = 0.0;
    double frame[kSamplesPerFrame];
    for (int i = 0; i < kSamplesPerFrame; ++i) {
      const double time = (t * kSamplesPerFrame + i) / double(kSampleRate);
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += w[k] * std::sin(2.0 * M_PI * f[k] * time);
      frame[i] = v;
      sumsq += v * v;
    }
    const double rms = std::sqrt(sumsq / kSamplesPerFrame);
    const double amp = rms > 0 ? kRmsPerOpenness * openness[t] / rms : 0.0;
    for (int i = 0; i < kSamplesPerFrame; ++i)
      clip.samples[t * kSamplesPerFrame + i] = static_cast<float>(amp * frame[i]);
  }
  return clip;
}

// Per-frame RMS of an audio clip (640 samples per frame).
inline std::vector<float> frame_rms(const std::vector<float>& samples, index_t frames) {
  std::vector<float> out(static_cast<size_t>(frames), 0.0f);
  for (index_t t = 0; t < frames; ++t) {
    double acc = 0;
    for (int i = 0; i < kSamplesPerFrame; ++i) {
      const size_t idx = static_cast<size_t>(t) * kSamplesPerFrame + i;
      const double v = idx < samples.size() ? samples[idx] : 0.0;
      acc += v * v;
    }
    out[static_cast<size_t>(t)] = static_cast<float>(std::sqrt(acc / kSamplesPerFrame));
  }
  return out;
}

// ---------------------------------------------------------------------------

inline VideoSample render_scene(const SynthScene& scene, index_t size) {
  if (size != 32 && size != 64 && size != 128 && size != 256)
    throw ValidationError("size must be one of 32, 64, 128, 256; got " + std::to_string(size));
  validate_scene(scene);

  const index_t T = static_cast<index_t>(scene.openness.size());
  VideoSample out;
  out.frames = Tensor<float>::zeros({T, 3, size, size});
  out.landmarks = Tensor<float>::zeros({T, kNumLandmarks, 2});
  for (index_t t = 0; t < T; ++t) {
    render_frame(scene, t, size, out.frames.data() + t * 3 * size * size);
    scene_landmarks(scene, t, size, out.landmarks.data() + t * kNumLandmarks * 2);
  }
  out.audio = synth_audio(scene.openness);
  out.scene = scene;
  return out;
}

// Optional factor fixing for sample_scene.
struct SceneConstraints {
  std::optional<Identity> identity;
  std::optional<Pose> pose;
  std::optional<Emotion> emotion;
  std::optional<std::vector<float>> openness;
  index_t frames = 25;
};

// Uniform draw over the parameter ranges; openness is a smooth two-sine
// envelope clipped to [0,1].
inline SynthScene sample_scene(uint64_t rng_seed, const SceneConstraints& cons = {}) {
  Rng rng(mix64(rng_seed + 0x9E3779B97F4A7C15ULL));
  SynthScene s;
  s.identity.hue = static_cast<float>(rng.uniform(0.0, 1.0));
  s.identity.face_width = static_cast<float>(rng.uniform(0.6, 1.0));
  s.identity.eye_spacing = static_cast<float>(rng.uniform(0.2, 0.5));
  s.pose.theta_deg = static_cast<float>(rng.uniform(-30.0, 30.0));
  s.pose.tx = static_cast<float>(rng.uniform(-0.15, 0.15));
  s.pose.ty = static_cast<float>(rng.uniform(-0.15, 0.15));
  s.emotion.mouth_curve = static_cast<float>(rng.uniform(-1.0, 1.0));
  s.emotion.brow_tilt = static_cast<float>(rng.uniform(-1.0, 1.0));

  const index_t T = cons.openness ? static_cast<index_t>(cons.openness->size()) : cons.frames;
  const double f1 = rng.uniform(0.5, 2.0), p1 = rng.uniform(0.0, 2.0 * M_PI);
  const double f2 = rng.uniform(2.0, 4.0), p2 = rng.uniform(0.0, 2.0 * M_PI);
  s.openness.resize(static_cast<size_t>(T));
  for (index_t t = 0; t < T; ++t) {
    const double time = t / double(kFps);
    double v = 0.5 + 0.35 * std::sin(2.0 * M_PI * f1 * time + p1) +
               0.25 * std::sin(2.0 * M_PI * f2 * time + p2);
    s.openness[static_cast<size_t>(t)] = static_cast<float>(v < 0 ? 0 : (v > 1 ? 1 : v));
  }

  if (cons.identity) s.identity = *cons.identity;
  if (cons.pose) s.pose = *cons.pose;
  if (cons.emotion) s.emotion = *cons.emotion;
  if (cons.openness) s.openness = *cons.openness;
  validate_scene(s);
  return s;
}

}  // namespace synthface
}  // namespace speak

#endif  // SPEAK_SYNTHFACE_SCENE_HPP_
