// adst/container.h

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

#ifndef ADST_CONTAINER_H_
#define ADST_CONTAINER_H_

#include <map>
#include <string>

#include "adst/tensor.h"

// "ADST1" binary container, little-endian.
//   version 1: feature matrix — header {version:u32, n_frames:u64, dim:u64}
//              followed by row-major float32 payload.
//   version 2: checkpoint — u64 block count, then per block
//              {name_len:u32, name, rank:u32, dims:u64..., float32 payload}.

namespace adst {
namespace container {

void WriteMatrix(const std::string &path, const Tensor &rows);  // rank 2
Tensor ReadMatrix(const std::string &path);

void WriteCheckpoint(const std::string &path,
                     const std::map<std::string, Tensor> &blocks);
std::map<std::string, Tensor> ReadCheckpoint(const std::string &path);

}  // namespace container
}  // namespace adst

#endif  // ADST_CONTAINER_H_
