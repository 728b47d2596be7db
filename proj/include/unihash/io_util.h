// Copyright 2026 The UniHash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "unihash/errors.h"

// Little-endian primitives shared by the feature-file and checkpoint
// formats.

namespace unihash {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void write_u8(std::ostream& out, uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f32(std::ostream& out, float v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw FormatError("unexpected end of binary stream");
  }
  return v;
}

inline uint8_t read_u8(std::istream& in) { return read_pod<uint8_t>(in); }
inline uint32_t read_u32(std::istream& in) { return read_pod<uint32_t>(in); }
inline uint64_t read_u64(std::istream& in) { return read_pod<uint64_t>(in); }
inline float read_f32(std::istream& in) { return read_pod<float>(in); }

}  // namespace unihash
