// speak/irfd/swap_oracle.hpp

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

#ifndef SPEAK_IRFD_SWAP_ORACLE_HPP_
#define SPEAK_IRFD_SWAP_ORACLE_HPP_

#include "speak/irfd/model.hpp"
#include "speak/synthface/scene.hpp"

namespace speak {
namespace irfd {

// Ground-truth target for a factor swap on synthetic data: the first scene
// with one factor's parameters taken from the second. Mouth openness rides
// with emotion, since the emotion code is the one allowed to carry mouth
// shape.
inline synthface::SynthScene swap_scene_factor(const synthface::SynthScene& a,
                                               const synthface::SynthScene& b, Factor f) {
  synthface::SynthScene out = a;
  switch (f) {
    case Factor::identity:
      out.identity = b.identity;
      break;
    case Factor::pose:
      out.pose = b.pose;
      break;
    case Factor::emotion:
      out.emotion = b.emotion;
      out.openness = b.openness;
      break;
  }
  return out;
}

}  // namespace irfd
}  // namespace speak

#endif  // SPEAK_IRFD_SWAP_ORACLE_HPP_
