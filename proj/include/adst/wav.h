// adst/wav.h

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

#ifndef ADST_WAV_H_
#define ADST_WAV_H_

#include <string>
#include <vector>

#include "adst/common.h"

namespace adst {

struct AudioClip {
  std::vector<double> samples;  // PCM in [-1, 1]
  int sample_rate = 16000;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  void Validate() const {
    ADST_CHECK(!samples.empty(), "AudioClip: no samples");
    for (double s : samples)
      ADST_CHECK(std::isfinite(s), "AudioClip: non-finite sample");
  }
};

// PCM16 WAV. Stereo input is averaged to mono with a stderr warning.
AudioClip ReadWav(const std::string &path);
void WriteWav(const std::string &path, const AudioClip &clip);

}  // namespace adst

#endif  // ADST_WAV_H_
