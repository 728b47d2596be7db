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

#include "unihash/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "unihash/errors.h"
#include "unihash/format.h"

namespace unihash {
namespace {

std::string fmt(double v) { return format_double(v); }

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" +
                    text + "'");
}

struct Field {
  const char* key;
  const char* help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define UNIHASH_FIELD(KEY, TYPE, MEMBER, HELP)                          \
  Field {                                                               \
    KEY, HELP, [](const RunConfig& c) { return fmt(c.MEMBER); },        \
        [](RunConfig& c, const std::string& v) {                        \
          c.MEMBER = parse_value<TYPE>(KEY, v);                         \
        }                                                               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      UNIHASH_FIELD("seed", uint64_t, seed,
                    "seed for centers, initialisation and shuffling"),
      Field{"data.path", "feature file; empty generates synthetic data",
            [](const RunConfig& c) { return c.data.path; },
            [](RunConfig& c, const std::string& v) { c.data.path = v; }},
      UNIHASH_FIELD("data.classes", int, data.classes, "synthetic classes C"),
      UNIHASH_FIELD("data.dim", int, data.dim, "synthetic feature dimension"),
      UNIHASH_FIELD("data.per_class", int, data.per_class,
                    "synthetic samples per class"),
      UNIHASH_FIELD("data.spread", double, data.spread,
                    "synthetic per-coordinate noise std"),
      UNIHASH_FIELD("data.seed", uint64_t, data.seed,
                    "seed for data generation and the seen/unseen split"),
      UNIHASH_FIELD("split.seen_ratio", double, split.seen_ratio,
                    "fraction of classes treated as seen"),
      UNIHASH_FIELD("split.query_frac", double, split.query_frac,
                    "per-class fraction held out as queries"),
      UNIHASH_FIELD("split.val_frac", double, split.val_frac,
                    "fraction of the seen database used for branch selection"),
      UNIHASH_FIELD("split.train_frac", double, split.train_frac,
                    "fraction of the remaining seen database used to train"),
      Field{"centers.method", "auto, hadamard or random",
            [](const RunConfig& c) { return c.centers.method; },
            [](RunConfig& c, const std::string& v) {
              if (v != "auto" && v != "hadamard" && v != "random") {
                throw ConfigError("centers.method must be auto, hadamard or "
                                  "random");
              }
              c.centers.method = v;
            }},
      UNIHASH_FIELD("centers.d_floor", int, centers.d_floor,
                    "random centers: minimum distance (0 = ceil(q/4))"),
      UNIHASH_FIELD("model.input_dim", int, train.model.input_dim,
                    "input dimension (taken from the data at train time)"),
      UNIHASH_FIELD("model.feature_dim", int, train.model.feature_dim,
                    "backbone output dimension d"),
      UNIHASH_FIELD("model.code_length", int, train.model.code_length,
                    "hash code length q"),
      UNIHASH_FIELD("model.num_experts", int, train.model.num_experts,
                    "number of experts m"),
      UNIHASH_FIELD("model.top_k", int, train.model.top_k,
                    "experts routed per branch k"),
      UNIHASH_FIELD("model.backbone_depth", int, train.model.backbone_depth,
                    "affine+ReLU backbone layers (0 = identity)"),
      Field{"model.gate_mode", "sigmoid_norm or softmax",
            [](const RunConfig& c) { return to_string(c.train.model.gate_mode); },
            [](RunConfig& c, const std::string& v) {
              try {
                c.train.model.gate_mode = parse_gate_mode(v);
              } catch (const ArgumentError& e) {
                throw ConfigError(e.what());
              }
            }},
      UNIHASH_FIELD("model.shared_experts", bool, train.model.shared_experts,
                    "both branches route into one expert bank"),
      UNIHASH_FIELD("model.tanh_output", bool, train.model.tanh_output,
                    "squash merged codes with tanh"),
      UNIHASH_FIELD("train.epochs", int, train.epochs, "epochs T"),
      UNIHASH_FIELD("train.batch_size", int, train.batch_size,
                    "minibatch size N"),
      UNIHASH_FIELD("train.lr", double, train.optimizer.lr,
                    "RMSProp learning rate"),
      UNIHASH_FIELD("train.rms_decay", double, train.optimizer.decay,
                    "RMSProp decay alpha"),
      UNIHASH_FIELD("train.rms_eps", double, train.optimizer.eps,
                    "RMSProp epsilon"),
      UNIHASH_FIELD("train.lambda1", double, train.weights.center,
                    "center loss weight"),
      UNIHASH_FIELD("train.lambda2", double, train.weights.pairwise,
                    "pairwise loss weight"),
      UNIHASH_FIELD("train.lambda3", double, train.weights.mutual,
                    "mutual loss weight"),
      Field{"train.detach_schedule", "per_epoch or per_iteration",
            [](const RunConfig& c) { return to_string(c.train.schedule); },
            [](RunConfig& c, const std::string& v) {
              try {
                c.train.schedule = parse_detach_schedule(v);
              } catch (const ArgumentError& e) {
                throw ConfigError(e.what());
              }
            }},
      UNIHASH_FIELD("train.include_diagonal", bool,
                    train.pairwise.include_diagonal,
                    "include i=j pairs in the pairwise loss"),
      UNIHASH_FIELD("eval.k", int, eval.k, "mAP cutoff K"),
  };
  return table;
}

#undef UNIHASH_FIELD

void flatten(const nlohmann::json& node, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) {
      flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    }
    return;
  }
  if (node.is_string()) {
    out.emplace_back(prefix, node.get<std::string>());
  } else if (node.is_boolean()) {
    out.emplace_back(prefix, node.get<bool>() ? "true" : "false");
  } else if (node.is_number_integer() || node.is_number_unsigned()) {
    out.emplace_back(prefix, node.dump());
  } else if (node.is_number_float()) {
    out.emplace_back(prefix, fmt(node.get<double>()));
  } else {
    throw ConfigError("config key '" + prefix + "' has an unsupported value");
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.help);
  return out;
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_kv() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::from_kv(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

void RunConfig::merge_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config document must be an object");
  std::vector<std::pair<std::string, std::string>> kv;
  flatten(doc, "", kv);
  for (const auto& [k, v] : kv) set(k, v);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  merge_json(doc);
}

std::string RunConfig::to_kv_text() const {
  std::string out;
  for (const auto& [k, v] : to_kv()) out += k + "=" + v + "\n";
  return out;
}

RunConfig RunConfig::from_kv_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config block line without '=': " + line);
    }
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

void RunConfig::validate() const {
  if (data.path.empty()) {
    if (data.classes < 2 || data.dim < 2 || data.per_class < 1 ||
        !(data.spread >= 0.0)) {
      throw ConfigError("synthetic data needs classes >= 2, dim >= 2, "
                        "per_class >= 1, spread >= 0");
    }
  }
  if (eval.k < 1) throw ConfigError("eval.k must be >= 1");
  if (centers.d_floor < 0 || centers.d_floor > train.model.code_length) {
    throw ConfigError("centers.d_floor must lie in [0, q]");
  }
  if (!(split.seen_ratio > 0.0 && split.seen_ratio <= 1.0)) {
    throw ConfigError("split.seen_ratio must lie in (0, 1]");
  }
  train.validate();
}

}  // namespace unihash
