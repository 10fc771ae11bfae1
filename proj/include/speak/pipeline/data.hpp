// speak/pipeline/data.hpp

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

#ifndef SPEAK_PIPELINE_DATA_HPP_
#define SPEAK_PIPELINE_DATA_HPP_

#include <optional>
#include <string>
#include <vector>

#include "speak/core/errors.hpp"
#include "speak/core/rng.hpp"
#include "speak/synthface/scene.hpp"

namespace speak {
namespace pipeline {

// Deterministic bank of rendered synthetic clips. Clip i is fully determined
// by (seed, i), independent of render order, so two runs and a resumed run
// see identical data. Rendered clips are cached; frames are the large part,
// at 64 px a 25-frame clip is ~1.2 MB.
class SynthClipset {
 public:
  SynthClipset(index_t image, index_t clip_frames, int num_clips, uint64_t seed)
      : image_(image), frames_(clip_frames), seed_(seed), cache_(num_clips) {
    if (num_clips < 1) throw ValidationError("clipset needs at least one clip");
    if (clip_frames < 1) throw ValidationError("clipset needs at least one frame per clip");
  }

  int size() const { return static_cast<int>(cache_.size()); }
  index_t image() const { return image_; }
  index_t clip_frames() const { return frames_; }

  synthface::SynthScene scene(int i) const {
    if (i < 0 || i >= size())
      throw ValidationError("clip index " + std::to_string(i) + " out of range");
    synthface::SceneConstraints cons;
    cons.frames = frames_;
    return synthface::sample_scene(mix64(seed_ ^ mix64(static_cast<uint64_t>(i))), cons);
  }

  const synthface::VideoSample& clip(int i) const {
    if (i < 0 || i >= size())
      throw ValidationError("clip index " + std::to_string(i) + " out of range");
    if (!cache_[static_cast<size_t>(i)])
      cache_[static_cast<size_t>(i)] = synthface::render_scene(scene(i), image_);
    return *cache_[static_cast<size_t>(i)];
  }

  // Single-frame scene keyed off this bank's namespace, for frame-level
  // swap training. Not cached; one frame renders fast.
  synthface::SynthScene frame_scene(uint64_t key) const {
    synthface::SceneConstraints cons;
    cons.frames = 1;
    return synthface::sample_scene(mix64(seed_ ^ 0xA5A5A5A5A5A5A5A5ULL ^ mix64(key)), cons);
  }

 private:
  index_t image_;
  index_t frames_;
  uint64_t seed_;
  mutable std::vector<std::optional<synthface::VideoSample>> cache_;
};

}  // namespace pipeline
}  // namespace speak

#endif  // SPEAK_PIPELINE_DATA_HPP_
