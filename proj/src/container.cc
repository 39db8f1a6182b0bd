// adst/container.cc

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

#include "adst/container.h"

#include <cstring>
#include <fstream>
#include <vector>

namespace adst {
namespace container {

namespace {

constexpr char kMagic[5] = {'A', 'D', 'S', 'T', '1'};

template <typename T>
void WriteRaw(std::ofstream &f, T v) {
  f.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T ReadRaw(std::ifstream &f, const std::string &path) {
  T v;
  f.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!f) throw IoError("truncated container file: " + path);
  return v;
}

void WriteFloats(std::ofstream &f, const Tensor &t) {
  std::vector<float> buf(t.numel());
  for (int64_t i = 0; i < t.numel(); ++i) buf[i] = static_cast<float>(t[i]);
  f.write(reinterpret_cast<const char *>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void ReadFloats(std::ifstream &f, Tensor *t, const std::string &path) {
  std::vector<float> buf(t->numel());
  f.read(reinterpret_cast<char *>(buf.data()),
         static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!f) throw IoError("truncated container payload: " + path);
  for (int64_t i = 0; i < t->numel(); ++i) (*t)[i] = buf[i];
}

std::ofstream OpenOut(const std::string &path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(kMagic, 5);
  return f;
}

std::ifstream OpenIn(const std::string &path, uint32_t expect_version) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[5];
  f.read(magic, 5);
  if (!f || std::memcmp(magic, kMagic, 5) != 0)
    throw IoError("not an ADST1 container: " + path);
  const uint32_t version = ReadRaw<uint32_t>(f, path);
  if (version != expect_version)
    throw IoError("unexpected container version in " + path);
  return f;
}

}  // namespace

void WriteMatrix(const std::string &path, const Tensor &rows) {
  ADST_CHECK(rows.rank() == 2, "WriteMatrix expects a rank-2 tensor");
  std::ofstream f = OpenOut(path);
  WriteRaw<uint32_t>(f, 1);
  WriteRaw<uint64_t>(f, static_cast<uint64_t>(rows.dim(0)));
  WriteRaw<uint64_t>(f, static_cast<uint64_t>(rows.dim(1)));
  WriteFloats(f, rows);
  if (!f) throw IoError("write failed: " + path);
}

Tensor ReadMatrix(const std::string &path) {
  std::ifstream f = OpenIn(path, 1);
  const auto n = static_cast<int64_t>(ReadRaw<uint64_t>(f, path));
  const auto d = static_cast<int64_t>(ReadRaw<uint64_t>(f, path));
  Tensor t({n, d});
  ReadFloats(f, &t, path);
  return t;
}

void WriteCheckpoint(const std::string &path,
                     const std::map<std::string, Tensor> &blocks) {
  std::ofstream f = OpenOut(path);
  WriteRaw<uint32_t>(f, 2);
  WriteRaw<uint64_t>(f, blocks.size());
  for (const auto &[name, t] : blocks) {
    WriteRaw<uint32_t>(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteRaw<uint32_t>(f, static_cast<uint32_t>(t.rank()));
    for (int64_t d : t.shape()) WriteRaw<uint64_t>(f, static_cast<uint64_t>(d));
    WriteFloats(f, t);
  }
  if (!f) throw IoError("write failed: " + path);
}

std::map<std::string, Tensor> ReadCheckpoint(const std::string &path) {
  std::ifstream f = OpenIn(path, 2);
  const uint64_t count = ReadRaw<uint64_t>(f, path);
  std::map<std::string, Tensor> out;
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t len = ReadRaw<uint32_t>(f, path);
    std::string name(len, '\0');
    f.read(name.data(), len);
    if (!f) throw IoError("truncated container file: " + path);
    const uint32_t rank = ReadRaw<uint32_t>(f, path);
    std::vector<int64_t> shape(rank);
    for (uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<int64_t>(ReadRaw<uint64_t>(f, path));
    Tensor t(shape);
    ReadFloats(f, &t, path);
    out[name] = std::move(t);
  }
  return out;
}

}  // namespace container
}  // namespace adst
