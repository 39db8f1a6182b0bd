// adst/common.h

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

#ifndef ADST_COMMON_H_
#define ADST_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace adst {

// Validation failures (bad arguments, violated invariants). CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string &msg)
      : std::invalid_argument(msg) {}
};

// Filesystem / serialization failures. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

class SingularWarpError : public std::runtime_error {
 public:
  explicit SingularWarpError(const std::string &msg)
      : std::runtime_error(msg) {}
};

class DegenerateRegionError : public std::runtime_error {
 public:
  explicit DegenerateRegionError(const std::string &msg)
      : std::runtime_error(msg) {}
};

class EmptyMapError : public std::runtime_error {
 public:
  explicit EmptyMapError(const std::string &msg) : std::runtime_error(msg) {}
};

#define ADST_CHECK(cond, msg)                  \
  do {                                         \
    if (!(cond)) throw ::adst::ValidationError(msg); \
  } while (0)

// All randomness in the project flows through this engine, seeded once per
// run from --seed so runs are reproducible bit-for-bit.
using Rng = std::mt19937_64;

inline double UniformReal(Rng &rng, double lo, double hi) {
  // Explicit construction instead of std::uniform_real_distribution keeps
  // the byte stream identical across standard-library versions.
  const double u =
      static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  return lo + (hi - lo) * u;
}

// Box-Muller; avoids the implementation-defined std::normal_distribution.
inline double NormalReal(Rng &rng) {
  double u1 = UniformReal(rng, 0.0, 1.0);
  double u2 = UniformReal(rng, 0.0, 1.0);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace adst

#endif  // ADST_COMMON_H_
