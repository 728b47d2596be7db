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

#include "unihash/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "unihash/errors.h"
#include "unihash/io_util.h"
#include "unihash/rng.h"

namespace unihash {
namespace {

constexpr char kBinaryMagic[4] = {'U', 'H', 'F', '1'};

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void fail_line(size_t line, const std::string& what) {
  throw FormatError("feature file line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view tok, size_t line, const char* what) {
  tok = trim(tok);
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    fail_line(line, std::string("cannot parse ") + what + " '" +
                        std::string(tok) + "'");
  }
  return value;
}

Dataset load_text(std::istream& in) {
  Dataset ds;
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  size_t expected = 0;
  std::unordered_set<int64_t> ids;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!have_header) {
      std::istringstream hs{std::string(view)};
      long long n = -1, dim = -1, classes = -1, ml = -1;
      std::string extra;
      if (!(hs >> n >> dim >> classes >> ml) || (hs >> extra) || n < 0 ||
          dim < 1 || classes < 1 || (ml != 0 && ml != 1)) {
        fail_line(line_no, "malformed header, expected 'n D_in C multilabel'");
      }
      expected = static_cast<size_t>(n);
      ds.feature_dim = static_cast<int>(dim);
      ds.num_classes = static_cast<int>(classes);
      ds.is_multilabel = ml == 1;
      ds.samples.reserve(expected);
      have_header = true;
      continue;
    }
    auto fields = split_view(view, ';');
    if (fields.size() != 3) {
      fail_line(line_no, "expected 'id;labels;features'");
    }
    Sample s;
    s.id = parse_number<int64_t>(fields[0], line_no, "id");
    if (!ids.insert(s.id).second) {
      fail_line(line_no, "duplicate id " + std::to_string(s.id));
    }
    auto labels = split_view(fields[1], ',');
    if (labels.size() != static_cast<size_t>(ds.num_classes)) {
      fail_line(line_no, "row " + std::to_string(ds.samples.size()) + " has " +
                             std::to_string(labels.size()) +
                             " labels, header says " +
                             std::to_string(ds.num_classes));
    }
    for (auto tok : labels) {
      int v = parse_number<int>(tok, line_no, "label");
      if (v != 0 && v != 1) fail_line(line_no, "label out of bounds");
      s.labels.push_back(static_cast<uint8_t>(v));
    }
    auto feats = split_view(fields[2], ',');
    if (feats.size() != static_cast<size_t>(ds.feature_dim)) {
      fail_line(line_no, "row " + std::to_string(ds.samples.size()) + " has " +
                             std::to_string(feats.size()) +
                             " features, header says " +
                             std::to_string(ds.feature_dim));
    }
    for (auto tok : feats) {
      float f = parse_number<float>(tok, line_no, "feature");
      if (!std::isfinite(f)) fail_line(line_no, "non-finite feature");
      s.features.push_back(f);
    }
    if (std::none_of(s.labels.begin(), s.labels.end(),
                     [](uint8_t b) { return b != 0; })) {
      fail_line(line_no, "sample has no label");
    }
    if (ds.samples.size() == expected) {
      fail_line(line_no, "more rows than the header's n=" +
                             std::to_string(expected));
    }
    ds.samples.push_back(std::move(s));
  }
  if (!have_header) throw FormatError("feature file is empty");
  if (ds.samples.size() != expected) {
    throw FormatError("feature file has " + std::to_string(ds.samples.size()) +
                      " rows, header says " + std::to_string(expected));
  }
  return ds;
}

Dataset load_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);  // already checked by caller
  Dataset ds;
  uint64_t n = read_u64(in);
  uint64_t dim = read_u64(in);
  uint64_t classes = read_u64(in);
  uint8_t ml = read_u8(in);
  if (dim == 0 || classes == 0 || ml > 1 || dim > (1u << 24) ||
      classes > (1u << 24)) {
    throw FormatError("binary feature file: invalid header");
  }
  ds.feature_dim = static_cast<int>(dim);
  ds.num_classes = static_cast<int>(classes);
  ds.is_multilabel = ml == 1;
  for (uint64_t i = 0; i < n; ++i) {
    Sample s;
    s.id = static_cast<int64_t>(i);
    s.labels.resize(classes);
    in.read(reinterpret_cast<char*>(s.labels.data()),
            static_cast<std::streamsize>(classes));
    if (!in) {
      throw FormatError("binary feature file truncated at record " +
                        std::to_string(i));
    }
    bool any = false;
    for (uint8_t b : s.labels) {
      if (b > 1) {
        throw FormatError("record " + std::to_string(i) +
                          ": label out of bounds");
      }
      any = any || b;
    }
    if (!any) {
      throw FormatError("record " + std::to_string(i) + ": sample has no label");
    }
    s.features.resize(dim);
    for (auto& f : s.features) {
      f = read_f32(in);
      if (!std::isfinite(f)) {
        throw FormatError("record " + std::to_string(i) +
                          ": non-finite feature");
      }
    }
    ds.samples.push_back(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("binary feature file has trailing bytes");
  }
  return ds;
}

}  // namespace

std::vector<const Protocol*> ProtocolSets::available() const {
  std::vector<const Protocol*> out;
  for (const auto* p : {&seen_seen, &seen_all, &unseen_unseen, &unseen_all}) {
    if (p->has_value()) out.push_back(&p->value());
  }
  return out;
}

const std::optional<Protocol>& ProtocolSets::by_name(
    const std::string& name) const {
  if (name == kProtocolNames[0]) return seen_seen;
  if (name == kProtocolNames[1]) return seen_all;
  if (name == kProtocolNames[2]) return unseen_unseen;
  if (name == kProtocolNames[3]) return unseen_all;
  throw ArgumentError("unknown protocol '" + name + "'");
}

Dataset generate_synthetic(int num_classes, int feature_dim, int n_per_class,
                           double spread, uint64_t seed) {
  if (num_classes < 2) throw ArgumentError("generate_synthetic: C must be >= 2");
  if (feature_dim < 2) {
    throw ArgumentError("generate_synthetic: D_in must be >= 2");
  }
  if (n_per_class < 1) {
    throw ArgumentError("generate_synthetic: n_per_class must be >= 1");
  }
  if (!(spread >= 0.0) || !std::isfinite(spread)) {
    throw ArgumentError("generate_synthetic: spread must be >= 0");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const size_t dim = static_cast<size_t>(feature_dim);

  std::vector<std::vector<double>> centers;
  centers.reserve(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    std::vector<double> v(dim);
    double norm = 0.0;
    // Redraw on the (measure-zero) chance of a degenerate direction.
    do {
      for (auto& x : v) x = normal(rng);
      if (static_cast<size_t>(c) < dim) {
        for (const auto& prev : centers) {
          double dot = 0.0;
          for (size_t j = 0; j < dim; ++j) dot += v[j] * prev[j];
          for (size_t j = 0; j < dim; ++j) v[j] -= dot * prev[j];
        }
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    for (auto& x : v) x /= norm;
    centers.push_back(std::move(v));
  }

  Dataset ds;
  ds.num_classes = num_classes;
  ds.feature_dim = feature_dim;
  ds.is_multilabel = false;
  ds.samples.reserve(static_cast<size_t>(num_classes) * n_per_class);
  int64_t next_id = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      Sample s;
      s.id = next_id++;
      s.labels.assign(num_classes, 0);
      s.labels[c] = 1;
      s.features.resize(dim);
      for (size_t j = 0; j < dim; ++j) {
        double noise = spread > 0.0 ? spread * normal(rng) : 0.0;
        s.features[j] = static_cast<float>(centers[c][j] + noise);
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

void validate_dataset(const Dataset& ds) {
  if (ds.num_classes < 1 || ds.feature_dim < 1) {
    throw FormatError("dataset has no classes or zero feature dimension");
  }
  std::unordered_set<int64_t> ids;
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    if (s.features.size() != static_cast<size_t>(ds.feature_dim) ||
        s.labels.size() != static_cast<size_t>(ds.num_classes)) {
      throw ShapeError("sample " + std::to_string(i) +
                       " does not match dataset dimensions");
    }
    if (!ids.insert(s.id).second) {
      throw FormatError("duplicate sample id " + std::to_string(s.id));
    }
    bool any = false;
    for (uint8_t b : s.labels) {
      if (b > 1) throw FormatError("label out of bounds");
      any = any || b;
    }
    if (!any) throw FormatError("sample " + std::to_string(i) + " has no label");
    for (float f : s.features) {
      if (!std::isfinite(f)) {
        throw NumericError("sample " + std::to_string(i) +
                           " has a non-finite feature");
      }
    }
  }
}

Dataset load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  bool binary = in.gcount() == 4 && std::memcmp(magic, kBinaryMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? load_binary(in) : load_text(in);
}

void write_features_text(const Dataset& ds, const std::filesystem::path& path) {
  validate_dataset(ds);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << ds.size() << ' ' << ds.feature_dim << ' ' << ds.num_classes << ' '
      << (ds.is_multilabel ? 1 : 0) << '\n';
  char buf[64];
  for (const Sample& s : ds.samples) {
    out << s.id << ';';
    for (size_t c = 0; c < s.labels.size(); ++c) {
      if (c) out << ',';
      out << static_cast<int>(s.labels[c]);
    }
    out << ';';
    for (size_t j = 0; j < s.features.size(); ++j) {
      if (j) out << ',';
      auto res = std::to_chars(buf, buf + sizeof(buf), s.features[j]);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_features_binary(const Dataset& ds,
                           const std::filesystem::path& path) {
  validate_dataset(ds);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kBinaryMagic, 4);
  write_u64(out, ds.size());
  write_u64(out, static_cast<uint64_t>(ds.feature_dim));
  write_u64(out, static_cast<uint64_t>(ds.num_classes));
  write_u8(out, ds.is_multilabel ? 1 : 0);
  for (const Sample& s : ds.samples) {
    out.write(reinterpret_cast<const char*>(s.labels.data()),
              static_cast<std::streamsize>(s.labels.size()));
    for (float f : s.features) write_f32(out, f);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_features(const Dataset& ds, const std::filesystem::path& path) {
  if (path.extension() == ".txt") {
    write_features_text(ds, path);
  } else {
    write_features_binary(ds, path);
  }
}

int seen_class_count(int num_classes, double seen_ratio) {
  if (!(seen_ratio > 0.0 && seen_ratio <= 1.0)) {
    throw ArgumentError("seen_ratio must lie in (0, 1]");
  }
  int seen = static_cast<int>(std::floor(seen_ratio * num_classes + 0.5));
  if (seen_ratio == 1.0) return num_classes;
  if (seen < 1 || seen >= num_classes) {
    throw ArgumentError("seen_ratio " + std::to_string(seen_ratio) + " with " +
                        std::to_string(num_classes) +
                        " classes leaves an empty seen or unseen group");
  }
  return seen;
}

bool labels_within(const std::vector<uint8_t>& labels,
                   const std::vector<uint8_t>& class_mask) {
  for (size_t c = 0; c < labels.size(); ++c) {
    if (labels[c] && !class_mask[c]) return false;
  }
  return true;
}

SplitDataset split_seen_unseen(const Dataset& ds, const SplitOptions& options) {
  const int num_seen = seen_class_count(ds.num_classes, options.seen_ratio);
  for (double f : {options.query_frac, options.val_frac, options.train_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ArgumentError("split fractions must lie in [0, 1]");
    }
  }

  std::vector<int> classes(ds.num_classes);
  for (int c = 0; c < ds.num_classes; ++c) classes[c] = c;
  std::mt19937_64 class_rng(mix_seed(options.seed, 0x5eed));
  std::shuffle(classes.begin(), classes.end(), class_rng);

  SplitDataset split;
  split.seen_classes.assign(classes.begin(), classes.begin() + num_seen);
  split.unseen_classes.assign(classes.begin() + num_seen, classes.end());
  std::sort(split.seen_classes.begin(), split.seen_classes.end());
  std::sort(split.unseen_classes.begin(), split.unseen_classes.end());

  std::vector<uint8_t> seen_mask(ds.num_classes, 0);
  std::vector<uint8_t> unseen_mask(ds.num_classes, 0);
  for (int c : split.seen_classes) seen_mask[c] = 1;
  for (int c : split.unseen_classes) unseen_mask[c] = 1;

  // Pure samples are grouped by their lowest label and partitioned within
  // each group.
  std::map<int, std::vector<size_t>> seen_groups;
  std::map<int, std::vector<size_t>> unseen_groups;
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& labels = ds.samples[i].labels;
    int primary = static_cast<int>(
        std::find(labels.begin(), labels.end(), uint8_t{1}) - labels.begin());
    if (labels_within(labels, seen_mask)) {
      seen_groups[primary].push_back(i);
    } else if (labels_within(labels, unseen_mask)) {
      unseen_groups[primary].push_back(i);
    } else {
      split.db_all.push_back(i);  // mixed labels
    }
  }

  auto take = [](size_t n, double frac) {
    return static_cast<size_t>(std::floor(frac * static_cast<double>(n) + 0.5));
  };

  for (auto& [cls, members] : seen_groups) {
    std::mt19937_64 rng(mix_seed(options.seed, 0x1000 + cls));
    std::shuffle(members.begin(), members.end(), rng);
    size_t nq = take(members.size(), options.query_frac);
    split.query_seen.insert(split.query_seen.end(), members.begin(),
                            members.begin() + nq);
    std::vector<size_t> db(members.begin() + nq, members.end());
    split.db_seen.insert(split.db_seen.end(), db.begin(), db.end());
    size_t nv = take(db.size(), options.val_frac);
    split.val_query.insert(split.val_query.end(), db.begin(), db.begin() + nv);
    size_t pool = db.size() - nv;
    size_t nt = take(pool, options.train_frac);
    split.train.insert(split.train.end(), db.begin() + nv,
                       db.begin() + nv + nt);
  }
  for (auto& [cls, members] : unseen_groups) {
    std::mt19937_64 rng(mix_seed(options.seed, 0x1000 + cls));
    std::shuffle(members.begin(), members.end(), rng);
    size_t nq = take(members.size(), options.query_frac);
    split.query_unseen.insert(split.query_unseen.end(), members.begin(),
                              members.begin() + nq);
    split.db_unseen.insert(split.db_unseen.end(), members.begin() + nq,
                           members.end());
  }
  split.db_all.insert(split.db_all.end(), split.db_seen.begin(),
                      split.db_seen.end());
  split.db_all.insert(split.db_all.end(), split.db_unseen.begin(),
                      split.db_unseen.end());

  for (auto* list : {&split.train, &split.val_query, &split.query_seen,
                     &split.query_unseen, &split.db_seen, &split.db_unseen,
                     &split.db_all}) {
    std::sort(list->begin(), list->end());
  }
  return split;
}

ProtocolSets build_eval_protocols(const SplitDataset& split) {
  auto make = [](const char* name, const std::vector<size_t>& q,
                 const std::vector<size_t>& db) {
    if (q.empty() || db.empty()) {
      throw ProtocolError(std::string("protocol ") + name +
                          " has an empty query or database set");
    }
    return Protocol{name, q, db};
  };
  ProtocolSets sets;
  if (!split.seen_classes.empty()) {
    sets.seen_seen = make(kProtocolNames[0], split.query_seen, split.db_seen);
    sets.seen_all = make(kProtocolNames[1], split.query_seen, split.db_all);
  }
  if (!split.unseen_classes.empty()) {
    sets.unseen_unseen =
        make(kProtocolNames[2], split.query_unseen, split.db_unseen);
    sets.unseen_all = make(kProtocolNames[3], split.query_unseen, split.db_all);
  }
  return sets;
}

}  // namespace unihash
