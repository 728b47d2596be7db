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

#include "unihash/checkpoint.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "unihash/errors.h"
#include "unihash/io_util.h"

namespace unihash {
namespace {

constexpr char kMagic[4] = {'U', 'H', 'C', 'K'};

struct ManifestEntry {
  std::string name;
  std::vector<uint64_t> dims;
  size_t count() const {
    size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

}  // namespace

Checkpoint Checkpoint::from_training(RunConfig config, ModelParams params,
                                     HashCenterTable centers) {
  for (auto& a : param_arrays(params)) {
    for (auto& v : a.values) v = static_cast<double>(static_cast<float>(v));
  }
  config.train.model = params.config;
  return {std::move(config), std::move(params), std::move(centers)};
}

std::string Checkpoint::serialize() const {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  write_u32(out, kCheckpointVersion);

  const auto arrays = param_arrays(params);
  write_u64(out, arrays.size() + 1);
  auto manifest = [&](const std::string& name,
                      const std::vector<size_t>& shape) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, shape.size());
    for (size_t d : shape) write_u64(out, d);
  };
  for (const auto& a : arrays) manifest(a.name, a.shape);
  manifest("centers", {centers.centers.size(),
                       static_cast<size_t>(centers.code_length)});

  for (const auto& a : arrays) {
    for (double v : a.values) write_f32(out, static_cast<float>(v));
  }
  for (const auto& row : centers.centers) {
    for (int8_t v : row) write_f32(out, static_cast<float>(v));
  }

  const std::string text = config.to_kv_text();
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  return out.str();
}

Checkpoint Checkpoint::parse(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const uint32_t version = read_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  const uint64_t count = read_u64(in);
  if (count > (1u << 20)) throw FormatError("checkpoint manifest too large");
  std::vector<ManifestEntry> entries(count);
  for (auto& e : entries) {
    const uint64_t len = read_u64(in);
    if (len > 4096) throw FormatError("checkpoint array name too long");
    e.name.resize(len);
    in.read(e.name.data(), static_cast<std::streamsize>(len));
    const uint64_t rank = read_u64(in);
    if (rank > 8) throw FormatError("checkpoint array rank too large");
    e.dims.resize(rank);
    for (auto& d : e.dims) d = read_u64(in);
  }
  std::vector<std::vector<float>> payloads(count);
  for (size_t i = 0; i < count; ++i) {
    payloads[i].resize(entries[i].count());
    for (auto& v : payloads[i]) v = read_f32(in);
  }
  const uint64_t text_len = read_u64(in);
  std::string text(text_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(text_len));
  if (static_cast<uint64_t>(in.gcount()) != text_len) {
    throw FormatError("checkpoint config block truncated");
  }

  Checkpoint ck;
  ck.config = RunConfig::from_kv_text(text);
  ck.params = zeros_like(init_params(ck.config.train.model, 0));
  auto arrays = param_arrays(ck.params);
  if (arrays.size() + 1 != count) {
    throw FormatError("checkpoint array count does not match its config");
  }
  for (size_t i = 0; i < arrays.size(); ++i) {
    std::vector<uint64_t> shape(arrays[i].shape.begin(), arrays[i].shape.end());
    if (entries[i].name != arrays[i].name || entries[i].dims != shape) {
      throw FormatError("checkpoint array '" + entries[i].name +
                        "' does not match expected '" + arrays[i].name + "'");
    }
    for (size_t j = 0; j < payloads[i].size(); ++j) {
      arrays[i].values[j] = payloads[i][j];
    }
  }
  const auto& ce = entries.back();
  if (ce.name != "centers" || ce.dims.size() != 2) {
    throw FormatError("checkpoint is missing its centers array");
  }
  ck.centers.code_length = static_cast<int>(ce.dims[1]);
  for (uint64_t c = 0; c < ce.dims[0]; ++c) {
    std::vector<int8_t> row(ce.dims[1]);
    for (uint64_t j = 0; j < ce.dims[1]; ++j) {
      const float v = payloads.back()[c * ce.dims[1] + j];
      if (v != 1.0f && v != -1.0f) {
        throw FormatError("checkpoint center entry is not +-1");
      }
      row[j] = v > 0 ? 1 : -1;
    }
    ck.centers.centers.push_back(std::move(row));
  }
  ck.centers.min_distance = min_pairwise_hamming(ck.centers);
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace unihash
