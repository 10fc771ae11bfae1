// speak/metrics/metrics.hpp

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

#ifndef SPEAK_METRICS_METRICS_HPP_
#define SPEAK_METRICS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speak/core/autodiff.hpp"
#include "speak/core/errors.hpp"
#include "speak/core/tensor.hpp"
#include "speak/losses/losses.hpp"

namespace speak {
namespace metrics {

// Peak signal-to-noise ratio over all elements, unit-scale pixels.
// Identical inputs give the +inf sentinel.
template <class T>
T psnr(const Tensor<T>& x, const Tensor<T>& y) {
  if (x.shape != y.shape)
    throw ShapeError("psnr needs matching shapes, got " + shape_str(x.shape) + " vs " +
                     shape_str(y.shape));
  if (x.numel() == 0) throw ShapeError("psnr needs nonempty tensors");
  double mse = 0;
  for (index_t i = 0; i < x.numel(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(x.numel());
  if (mse == 0) return std::numeric_limits<T>::infinity();
  return static_cast<T>(10.0 * std::log10(1.0 / mse));
}

namespace detail {

// 11x11 gaussian, sigma 1.5, normalized to sum 1.
inline const std::vector<double>& ssim_window() {
  static const std::vector<double> w = [] {
    std::vector<double> k(11 * 11);
    double sum = 0;
    for (int i = 0; i < 11; ++i)
      for (int j = 0; j < 11; ++j) {
        const double di = i - 5, dj = j - 5;
        k[i * 11 + j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
        sum += k[i * 11 + j];
      }
    for (double& v : k) v /= sum;
    return k;
  }();
  return w;
}

// Channel mean for [C,H,W]; [H,W] passes through.
template <class T>
std::vector<double> to_gray(const Tensor<T>& x, index_t& H, index_t& W) {
  if (x.shape.size() == 2) {
    H = x.shape[0];
    W = x.shape[1];
    std::vector<double> g(H * W);
    for (index_t i = 0; i < H * W; ++i) g[i] = static_cast<double>(x[i]);
    return g;
  }
  if (x.shape.size() == 3) {
    const index_t C = x.shape[0];
    H = x.shape[1];
    W = x.shape[2];
    std::vector<double> g(H * W, 0.0);
    for (index_t c = 0; c < C; ++c)
      for (index_t i = 0; i < H * W; ++i) g[i] += static_cast<double>(x[c * H * W + i]);
    for (double& v : g) v /= static_cast<double>(C);
    return g;
  }
  throw ShapeError("ssim expects [H,W] or [C,H,W], got " + shape_str(x.shape));
}

}  // namespace detail

// Windowed structural similarity, L=1, K1=0.01, K2=0.03, valid windows only.
template <class T>
T ssim(const Tensor<T>& x, const Tensor<T>& y) {
  if (x.shape != y.shape)
    throw ShapeError("ssim needs matching shapes, got " + shape_str(x.shape) + " vs " +
                     shape_str(y.shape));
  index_t H = 0, W = 0;
  const std::vector<double> gx = detail::to_gray(x, H, W);
  const std::vector<double> gy = detail::to_gray(y, H, W);
  if (H < 11 || W < 11)
    throw ValidationError("ssim needs images at least 11x11, got " + shape_str(x.shape));

  const std::vector<double>& w = detail::ssim_window();
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double total = 0;
  for (index_t r = 0; r + 11 <= H; ++r)
    for (index_t c = 0; c + 11 <= W; ++c) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (index_t i = 0; i < 11; ++i)
        for (index_t j = 0; j < 11; ++j) {
          const double wk = w[i * 11 + j];
          const double a = gx[(r + i) * W + c + j];
          const double b = gy[(r + i) * W + c + j];
          mx += wk * a;
          my += wk * b;
          xx += wk * a * a;
          yy += wk * b * b;
          xy += wk * a * b;
        }
      const double vx = xx - mx * mx;
      const double vy = yy - my * my;
      const double cov = xy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  const index_t nwin = (H - 10) * (W - 10);
  return static_cast<T>(total / static_cast<double>(nwin));
}

// Mean euclidean landmark distance over frames and a landmark subset.
template <class T>
T lmd(const Tensor<T>& pred, const Tensor<T>& ref, const std::vector<index_t>& subset) {
  if (pred.shape != ref.shape)
    throw ShapeError("lmd needs matching shapes, got " + shape_str(pred.shape) + " vs " +
                     shape_str(ref.shape));
  if (pred.shape.size() != 3 || pred.shape[2] != 2)
    throw ShapeError("lmd expects [T,L,2], got " + shape_str(pred.shape));
  if (subset.empty()) throw ValidationError("lmd needs a nonempty landmark subset");
  const index_t frames = pred.shape[0], L = pred.shape[1];
  for (index_t s : subset)
    if (s < 0 || s >= L)
      throw ValidationError("lmd subset index " + std::to_string(s) + " out of range for " +
                            std::to_string(L) + " landmarks");
  double acc = 0;
  for (index_t t = 0; t < frames; ++t)
    for (index_t s : subset) {
      const index_t at = (t * L + s) * 2;
      const double dx = static_cast<double>(pred[at]) - static_cast<double>(ref[at]);
      const double dy = static_cast<double>(pred[at + 1]) - static_cast<double>(ref[at + 1]);
      acc += std::sqrt(dx * dx + dy * dy);
    }
  return static_cast<T>(acc / (static_cast<double>(frames) * subset.size()));
}

inline std::vector<index_t> all_landmarks(index_t count) {
  std::vector<index_t> s(count);
  std::iota(s.begin(), s.end(), index_t{0});
  return s;
}

struct ConfidenceConfig {
  index_t max_offset = 15;  // audio shift scan, in frames
};

// Mean embedding distance per audio offset. Every offset averages over the
// same set of video windows so a flat distance field yields a flat curve.
template <class T>
std::vector<T> confidence_curve(const Tensor<T>& frames, const std::vector<T>& audio,
                                const losses::SyncNet<T>& net,
                                const ConfidenceConfig& cfg = {}) {
  if (frames.shape.size() != 4 || frames.shape[1] != 3)
    throw ShapeError("confidence_curve expects frames [T,3,H,W], got " + shape_str(frames.shape));
  if (cfg.max_offset <= 0) throw ValidationError("confidence scan needs a positive max offset");
  const index_t nf = frames.shape[0];
  const index_t off = cfg.max_offset;
  const index_t samples_per_frame = losses::kWindowSamples / losses::kWindowFrames;
  if (nf < 2 * off + losses::kWindowFrames)
    throw ValidationError("confidence scan needs at least " +
                          std::to_string(2 * off + losses::kWindowFrames) + " frames, got " +
                          std::to_string(nf));
  if (static_cast<index_t>(audio.size()) < nf * samples_per_frame)
    throw ValidationError("confidence scan needs " + std::to_string(nf * samples_per_frame) +
                          " audio samples, got " + std::to_string(audio.size()));

  NoGradGuard ng;
  const index_t t_lo = off, t_hi = nf - losses::kWindowFrames - off;  // inclusive
  const index_t nwin = nf - losses::kWindowFrames + 1;

  std::vector<Var<T>> vwins;
  for (index_t t = t_lo; t <= t_hi; ++t)
    vwins.push_back(losses::mouth_window(Var<T>::leaf(frames), t));
  Var<T> vbatch = vwins.size() == 1 ? vwins[0] : ops::concat_front(vwins);

  Tensor<T> abatch = Tensor<T>::zeros({nwin, losses::kWindowSamples});
  for (index_t u = 0; u < nwin; ++u)
    std::copy(audio.begin() + u * samples_per_frame,
              audio.begin() + u * samples_per_frame + losses::kWindowSamples,
              abatch.data() + u * losses::kWindowSamples);

  const Tensor<T> ve = net.embed_video(vbatch).val();
  const Tensor<T> ae = net.embed_audio(Var<T>::leaf(std::move(abatch))).val();
  const index_t dim = ae.shape[1];

  std::vector<T> curve;
  curve.reserve(2 * off + 1);
  for (index_t o = -off; o <= off; ++o) {
    double acc = 0;
    for (index_t t = t_lo; t <= t_hi; ++t) {
      const index_t vi = t - t_lo;
      const index_t ai = t + o;
      double d2 = 0;
      for (index_t k = 0; k < dim; ++k) {
        const double d = static_cast<double>(ve[vi * dim + k]) -
                         static_cast<double>(ae[ai * dim + k]);
        d2 += d * d;
      }
      acc += std::sqrt(d2);
    }
    curve.push_back(static_cast<T>(acc / static_cast<double>(t_hi - t_lo + 1)));
  }
  return curve;
}

template <class T>
T confidence_from_curve(std::vector<T> curve) {
  if (curve.empty()) throw ValidationError("confidence needs a nonempty distance curve");
  const T lo = *std::min_element(curve.begin(), curve.end());
  std::nth_element(curve.begin(), curve.begin() + curve.size() / 2, curve.end());
  return curve[curve.size() / 2] - lo;
}

// Audiovisual sync score: median minus minimum of the offset distance curve.
// Aligned audio puts the dip at offset zero, pushing the score up.
template <class T>
T sync_confidence(const Tensor<T>& frames, const std::vector<T>& audio,
                  const losses::SyncNet<T>& net, const ConfidenceConfig& cfg = {}) {
  return confidence_from_curve(confidence_curve(frames, audio, net, cfg));
}

template <class T>
struct MetricReport {
  T ssim = T(0);
  T psnr = T(0);
  std::optional<T> f_lmd;
  std::optional<T> m_lmd;
  std::optional<T> sync_conf;
  int n = 1;
};

template <class T>
MetricReport<T> aggregate(const std::vector<MetricReport<T>>& parts) {
  if (parts.empty()) throw ValidationError("aggregate needs at least one report");
  MetricReport<T> out;
  out.n = 0;
  double ssim_acc = 0, psnr_acc = 0, f_acc = 0, m_acc = 0, s_acc = 0;
  int f_n = 0, m_n = 0, s_n = 0;
  for (const MetricReport<T>& r : parts) {
    if (r.ssim < T(-1) || r.ssim > T(1))
      throw ValidationError("ssim out of [-1,1] in report: " + std::to_string(r.ssim));
    if (!(r.psnr >= T(0)))
      throw ValidationError("psnr must be nonnegative or +inf in report");
    ssim_acc += r.ssim * r.n;
    psnr_acc += static_cast<double>(r.psnr) * r.n;
    if (r.f_lmd) {
      if (*r.f_lmd < T(0)) throw ValidationError("f_lmd must be nonnegative in report");
      f_acc += *r.f_lmd * r.n;
      f_n += r.n;
    }
    if (r.m_lmd) {
      if (*r.m_lmd < T(0)) throw ValidationError("m_lmd must be nonnegative in report");
      m_acc += *r.m_lmd * r.n;
      m_n += r.n;
    }
    if (r.sync_conf) {
      s_acc += *r.sync_conf * r.n;
      s_n += r.n;
    }
    out.n += r.n;
  }
  out.ssim = static_cast<T>(ssim_acc / out.n);
  out.psnr = static_cast<T>(psnr_acc / out.n);
  if (f_n > 0) out.f_lmd = static_cast<T>(f_acc / f_n);
  if (m_n > 0) out.m_lmd = static_cast<T>(m_acc / m_n);
  if (s_n > 0) out.sync_conf = static_cast<T>(s_acc / s_n);
  return out;
}

template <class T>
std::string format_report(const MetricReport<T>& r) {
  auto cell = [](const std::optional<T>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *v;
    return os.str();
  };
  std::ostringstream os;
  os << "SSIM\tPSNR\tF-LMD\tM-LMD\tSync_conf\tn\n";
  os << std::fixed << std::setprecision(4) << r.ssim << "\t";
  if (std::isinf(static_cast<double>(r.psnr)))
    os << "inf\t";
  else
    os << std::fixed << std::setprecision(4) << r.psnr << "\t";
  os << cell(r.f_lmd) << "\t" << cell(r.m_lmd) << "\t" << cell(r.sync_conf) << "\t" << r.n
     << "\n";
  return os.str();
}

}  // namespace metrics
}  // namespace speak

#endif  // SPEAK_METRICS_METRICS_HPP_
