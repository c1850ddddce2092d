// m2c/audio.hpp

// Copyright 2026  m2c authors

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

#ifndef M2C_AUDIO_HPP_
#define M2C_AUDIO_HPP_

#include <cstdio>
#include <vector>

#include "m2c/wav.hpp"

namespace m2c {

/// Cuts consecutive non-overlapping clips of `clip_seconds`; the final
/// remainder shorter than one clip is dropped. Audio shorter than one clip
/// yields an empty list (with a warning on stderr).
inline std::vector<Waveform> split_clips(const Waveform& w,
                                         double clip_seconds = 20.0) {
  M2C_CHECK(clip_seconds > 0, "split_clips: clip_seconds must be positive");
  std::size_t clip_len =
      static_cast<std::size_t>(clip_seconds * w.sample_rate + 0.5);
  std::vector<Waveform> clips;
  if (clip_len == 0 || w.samples.size() < clip_len) {
    std::fprintf(stderr,
                 "warning: audio of %.2fs shorter than one %.2fs clip, "
                 "no clips produced\n",
                 w.duration_seconds(), clip_seconds);
    return clips;
  }
  std::size_t count = w.samples.size() / clip_len;
  clips.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Waveform c;
    c.sample_rate = w.sample_rate;
    c.samples.assign(w.samples.begin() + i * clip_len,
                     w.samples.begin() + (i + 1) * clip_len);
    clips.push_back(std::move(c));
  }
  return clips;
}

}  // namespace m2c

#endif  // M2C_AUDIO_HPP_
