// adst/wav.cc

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

#include "adst/wav.h"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>

namespace adst {

namespace {

template <typename T>
T ReadLe(std::ifstream &f, const std::string &path) {
  T v;
  f.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!f) throw IoError("truncated WAV file: " + path);
  return v;
}

template <typename T>
void WriteLe(std::ofstream &f, T v) {
  f.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

}  // namespace

AudioClip ReadWav(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open WAV file: " + path);
  char tag[4];
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "RIFF", 4) != 0)
    throw IoError("not a RIFF/WAV file: " + path);
  ReadLe<uint32_t>(f, path);  // riff size
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAV file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  std::vector<int16_t> raw;
  bool have_fmt = false, have_data = false;
  while (f.read(tag, 4)) {
    const uint32_t size = ReadLe<uint32_t>(f, path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = ReadLe<uint16_t>(f, path);
      channels = ReadLe<uint16_t>(f, path);
      sample_rate = ReadLe<uint32_t>(f, path);
      ReadLe<uint32_t>(f, path);  // byte rate
      ReadLe<uint16_t>(f, path);  // block align
      bits = ReadLe<uint16_t>(f, path);
      if (size > 16) f.seekg(size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      raw.resize(size / 2);
      f.read(reinterpret_cast<char *>(raw.data()), size / 2 * 2);
      if (!f) throw IoError("truncated WAV data chunk: " + path);
      have_data = true;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!have_fmt || !have_data)
    throw IoError("WAV file missing fmt/data chunk: " + path);
  if (format != 1 || bits != 16)
    throw IoError("only PCM16 WAV is supported: " + path);
  if (channels != 1 && channels != 2)
    throw IoError("only mono or stereo WAV is supported: " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  if (channels == 1) {
    clip.samples.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) clip.samples[i] = raw[i] / 32768.0;
  } else {
    std::cerr << "warning: averaging stereo WAV to mono: " << path << "\n";
    clip.samples.resize(raw.size() / 2);
    for (size_t i = 0; i < clip.samples.size(); ++i)
      clip.samples[i] = (raw[2 * i] + raw[2 * i + 1]) / 65536.0;
  }
  clip.Validate();
  return clip;
}

void WriteWav(const std::string &path, const AudioClip &clip) {
  clip.Validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  const uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * 2);
  f.write("RIFF", 4);
  WriteLe<uint32_t>(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  WriteLe<uint32_t>(f, 16);
  WriteLe<uint16_t>(f, 1);  // PCM
  WriteLe<uint16_t>(f, 1);  // mono
  WriteLe<uint32_t>(f, static_cast<uint32_t>(clip.sample_rate));
  WriteLe<uint32_t>(f, static_cast<uint32_t>(clip.sample_rate * 2));
  WriteLe<uint16_t>(f, 2);
  WriteLe<uint16_t>(f, 16);
  f.write("data", 4);
  WriteLe<uint32_t>(f, data_size);
  for (double s : clip.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    WriteLe<int16_t>(f, static_cast<int16_t>(std::lround(c * 32767.0)));
  }
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace adst
