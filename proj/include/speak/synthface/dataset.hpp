// speak/synthface/dataset.hpp

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

#ifndef SPEAK_SYNTHFACE_DATASET_HPP_
#define SPEAK_SYNTHFACE_DATASET_HPP_

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "speak/core/image.hpp"
#include "speak/core/wav.hpp"
#include "speak/synthface/landmarks.hpp"
#include "speak/synthface/scene.hpp"

namespace speak {
namespace synthface {

// Loads a directory of frame_%05d.png images plus a WAV file. The audio is
// downmixed to mono, resampled to 16 kHz and trimmed or zero-padded to
// exactly T * 640 samples after the duration check.
inline VideoSample load_real_sample(const std::string& frames_dir, const std::string& wav_path,
                                    index_t size, const LandmarkProvider* provider = nullptr) {
  std::vector<Tensor<float>> raw = image::load_frame_dir(frames_dir);
  const index_t T = static_cast<index_t>(raw.size());

  wav::Audio audio = wav::read(wav_path);
  std::vector<float> samples = wav::resample(audio.samples, audio.sample_rate, kSampleRate);

  const double video_s = static_cast<double>(T) / kFps;
  const double audio_s = static_cast<double>(samples.size()) / kSampleRate;
  if (std::abs(video_s - audio_s) > 0.5)
    throw IngestionError("audio/video duration mismatch: " + std::to_string(T) + " frames = " +
                         std::to_string(video_s) + " s vs audio " + std::to_string(audio_s) + " s");
  samples.resize(static_cast<size_t>(T) * kSamplesPerFrame, 0.0f);

  VideoSample out;
  std::vector<Tensor<float>> resized;
  resized.reserve(raw.size());
  for (auto& f : raw) resized.push_back(image::resize_bilinear(f, size, size));
  out.frames = image::stack(resized);
  out.audio.samples = std::move(samples);
  if (provider) out.landmarks = provider->detect_video(out.frames);
  return out;
}

// ---------------------------------------------------------------------------
// dataset manifest: a json file listing sample paths and split tags

struct ManifestEntry {
  std::string frames_dir;
  std::string wav;
  std::string split;  // "train", "val", "test"
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> with_split(const std::string& split) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
      if (e.split == split) out.push_back(e);
    return out;
  }
};

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ValidationError("manifest parse error in " + path + ": " + e.what());
  }
  if (!j.contains("samples") || !j["samples"].is_array())
    throw ValidationError("manifest missing 'samples' array: " + path);
  Manifest m;
  for (const auto& item : j["samples"]) {
    ManifestEntry e;
    if (!item.contains("frames") || !item.contains("wav"))
      throw ValidationError("manifest entry missing 'frames' or 'wav': " + path);
    e.frames_dir = item["frames"].get<std::string>();
    e.wav = item["wav"].get<std::string>();
    e.split = item.value("split", "train");
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const std::string& path, const Manifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& e : m.entries)
    samples.push_back({{"frames", e.frames_dir}, {"wav", e.wav}, {"split", e.split}});
  nlohmann::json j{{"samples", samples}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace synthface
}  // namespace speak

#endif  // SPEAK_SYNTHFACE_DATASET_HPP_
