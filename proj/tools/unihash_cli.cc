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


// Command-line front end: gen-data, train, gradcheck, encode, eval, sweep.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration
// error, 3 numeric abort.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <list>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "unihash/checkpoint.h"
#include "unihash/config.h"
#include "unihash/dataset.h"
#include "unihash/errors.h"
#include "unihash/evaluation.h"
#include "unihash/format.h"
#include "unihash/gradcheck.h"
#include "unihash/pipeline.h"
#include "unihash/retrieval.h"

namespace fs = std::filesystem;
using namespace unihash;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::string default_of(const std::string& key) {
  for (const auto& [k, v] : RunConfig{}.to_kv()) {
    if (k == key) return v;
  }
  return {};
}

std::string help_of(const std::string& key) {
  for (const auto& [k, h] : config_keys()) {
    if (k == key) return h + " [" + k + "]";
  }
  return key;
}

// Flags that map onto RunConfig keys. Resolution order is built-in defaults,
// then --config, then --set, then the dedicated flags.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_,
                     "JSON config file (nested or dotted keys)")
        ->check(CLI::ExistingFile);
    app_->add_option("--set", overrides_,
                     "Override any config key, as key=value (repeatable)");
  }

  void value(const std::string& flag, const std::string& key) {
    values_.push_back({key, {}, nullptr, {}});
    auto& b = values_.back();
    b.option = app_->add_option(flag, b.text, help_of(key))
                   ->default_str(default_of(key));
  }

  // A valueless switch that writes `value` into `key`.
  void toggle(const std::string& flag, const std::string& key,
              const std::string& value, const std::string& help) {
    values_.push_back({key, value, nullptr, {}});
    auto& b = values_.back();
    b.option = app_->add_flag(flag, help);
  }

  RunConfig resolve(RunConfig base) const {
    if (!config_path_.empty()) base.merge_file(config_path_);
    for (const auto& kv : overrides_) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      }
      base.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& b : values_) {
      if (b.option->count() == 0) continue;
      base.set(b.key, b.option->get_expected() == 0 ? b.fixed : b.text);
    }
    return base;
  }

 private:
  struct Binding {
    std::string key;
    std::string fixed;
    CLI::Option* option;
    std::string text;
  };

  CLI::App* app_;
  std::string config_path_;
  std::vector<std::string> overrides_;
  std::list<Binding> values_;  // stable addresses for CLI11 bindings
};

void add_data_flags(ConfigFlags& f) {
  f.value("--data", "data.path");
  f.value("--classes", "data.classes");
  f.value("--dim", "data.dim");
  f.value("--per-class", "data.per_class");
  f.value("--spread", "data.spread");
  f.value("--data-seed", "data.seed");
  f.value("--seen-ratio", "split.seen_ratio");
  f.value("--query-frac", "split.query_frac");
  f.value("--val-frac", "split.val_frac");
  f.value("--train-frac", "split.train_frac");
}

void add_model_flags(ConfigFlags& f) {
  f.value("--centers", "centers.method");
  f.value("--d-floor", "centers.d_floor");
  f.value("--feature-dim", "model.feature_dim");
  f.value("-q,--code-length", "model.code_length");
  f.value("--experts", "model.num_experts");
  f.value("--top-k", "model.top_k");
  f.value("--backbone-depth", "model.backbone_depth");
  f.value("--gate-mode", "model.gate_mode");
  f.toggle("--unshared-experts", "model.shared_experts", "false",
           "Give each branch its own expert bank");
  f.toggle("--linear-output", "model.tanh_output", "false",
           "Drop the tanh on the merged codes");
  f.value("--epochs", "train.epochs");
  f.value("--batch-size", "train.batch_size");
  f.value("--lr", "train.lr");
  f.value("--rms-decay", "train.rms_decay");
  f.value("--rms-eps", "train.rms_eps");
  f.value("--lambda1", "train.lambda1");
  f.value("--lambda2", "train.lambda2");
  f.value("--lambda3", "train.lambda3");
  f.value("--detach-schedule", "train.detach_schedule");
  f.toggle("--exclude-diagonal", "train.include_diagonal", "false",
           "Leave i=j pairs out of the pairwise loss");
}

void print_summary(const MetricsReport& report) {
  std::cout << "selected branch: " << to_string(report.selection.branch)
            << " (validation mAP center "
            << format_double(report.selection.map_center) << ", pairwise "
            << format_double(report.selection.map_pairwise) << ")\n";
  std::cout << "tau2: " << format_double(report.tau2) << '\n';
  for (const auto& p : report.protocols) {
    if (!p.available) {
      std::cout << p.name << ": unavailable\n";
      continue;
    }
    std::cout << p.name << ": mAP@" << report.k << " center "
              << format_double(p.map_center) << ", pairwise "
              << format_double(p.map_pairwise) << ", selected "
              << format_double(p.map_selected) << '\n';
  }
}

void write_reports(const fs::path& out, const MetricsReport& report) {
  write_text(out / "metrics.json", metrics_json(report).dump(2) + "\n");
  write_text(out / "metrics.csv", metrics_csv(report));
  write_text(out / "pr_curve.csv", pr_curve_csv(report));
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ArgumentError(what + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw ArgumentError(what + ": empty grid");
  return out;
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& what) {
  std::vector<int> out;
  for (double v : parse_double_list(text, what)) {
    if (v != static_cast<double>(static_cast<int>(v))) {
      throw ArgumentError(what + ": expected integers");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

unsigned worker_count(size_t jobs) {
  unsigned n = 0;
  if (const char* env = std::getenv("UNIHASH_THREADS")) {
    try {
      n = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw ConfigError("UNIHASH_THREADS must be a non-negative integer");
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<size_t>(n, std::max<size_t>(jobs, 1)));
}

// ---------------------------------------------------------------- gen-data

struct GenDataCmd {
  int classes = 8;
  int dim = 32;
  int per_class = 250;
  double spread = 0.3;
  uint64_t seed = 1;
  std::string out = "data.uhf";

  void attach(CLI::App* app) {
    app->add_option("--classes", classes, "Number of classes (>= 2)")
        ->capture_default_str();
    app->add_option("--dim", dim, "Feature dimension")->capture_default_str();
    app->add_option("--per-class", per_class, "Samples per class")
        ->capture_default_str();
    app->add_option("--spread", spread, "Cluster standard deviation")
        ->capture_default_str();
    app->add_option("--seed", seed, "Generation seed")->capture_default_str();
    app->add_option("-o,--out", out,
                    "Output feature file (.txt for text, binary otherwise)")
        ->capture_default_str();
  }

  int run() const {
    if (classes < 2) throw ArgumentError("--classes must be >= 2");
    const Dataset ds = generate_synthetic(classes, dim, per_class, spread, seed);
    write_features(ds, out);
    std::cout << "wrote " << out << ": n=" << ds.size()
              << " D_in=" << ds.feature_dim << " C=" << ds.num_classes << '\n';
    return kExitOk;
  }
};

// ------------------------------------------------------------------- train

struct TrainCmd {
  std::unique_ptr<ConfigFlags> flags;
  std::string out = "run";

  void attach(CLI::App* app) {
    flags = std::make_unique<ConfigFlags>(app);
    flags->value("--seed", "seed");
    app->add_option("--out", out, "Output directory")->capture_default_str();
    add_data_flags(*flags);
    add_model_flags(*flags);
  }

  int run() const {
    const RunConfig config = flags->resolve(RunConfig{});
    config.validate();
    const PreparedData data = prepare_data(config);
    ensure_dir(out);
    const TrainedRun run = run_training(config, data);
    run.checkpoint.save(fs::path(out) / "checkpoint.uhck");
    write_text(fs::path(out) / "train_log.csv", train_log_csv(run.log));
    write_centers_text(run.checkpoint.centers, fs::path(out) / "centers.txt");
    const EpochLog& last = run.log.back();
    std::cout << "trained " << run.log.size() << " epochs on "
              << data.split.train.size() << " samples; final loss "
              << format_double(last.loss) << ", tau2 "
              << format_double(last.tau2) << '\n'
              << "wrote " << (fs::path(out) / "checkpoint.uhck").string()
              << '\n';
    return kExitOk;
  }
};

// --------------------------------------------------------------- gradcheck

struct GradCheckCmd {
  int seeds = 5;
  uint64_t seed = 0;
  double eps = 1e-4;
  bool corrupt = false;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--seeds", seeds, "Random instances per combination")
        ->capture_default_str();
    app->add_option("--seed", seed, "First instance seed")
        ->capture_default_str();
    app->add_option("--eps", eps,
                    "Finite-difference step; tolerance is max(1e-4, eps)")
        ->capture_default_str();
    app->add_flag("--corrupt", corrupt,
                  "Test hook: double one analytic gradient entry");
    app->add_option("--out", out,
                    "Directory for gradcheck.csv (not written when empty)");
  }

  int run() const {
    GradCheckSuiteOptions opts;
    opts.seeds = seeds;
    opts.base_seed = seed;
    opts.eps = eps;
    opts.corrupt = corrupt;
    const GradCheckSuiteResult result = run_gradcheck_suite(opts);

    // Per (gate mode, detach side): max over seeds for each group.
    std::map<std::pair<std::string, std::string>,
             std::map<std::string, double>> table;
    std::ostringstream csv;
    csv << "gate_mode,detach,seed,group,max_rel_error\n";
    size_t skipped = 0;
    for (const auto& c : result.cases) {
      auto& row = table[{to_string(c.gate_mode), to_string(c.detach)}];
      for (const auto& [group, err] : c.report.group_max) {
        row[group] = std::max(row[group], err);
        csv << to_string(c.gate_mode) << ',' << to_string(c.detach) << ','
            << c.seed << ',' << group << ',' << format_double(err) << '\n';
      }
      skipped += c.report.skipped;
    }
    for (const auto& [combo, groups] : table) {
      std::cout << "gate_mode=" << combo.first << " detach=" << combo.second
                << '\n';
      for (const auto& [group, err] : groups) {
        std::cout << "  " << group << ": " << format_double(err)
                  << (err < result.tolerance ? "" : "  FAIL") << '\n';
      }
    }
    std::cout << "max relative error " << format_double(result.max_rel_error)
              << " (tolerance " << format_double(result.tolerance) << ", "
              << skipped << " kinked coordinates skipped)\n";
    if (!out.empty()) {
      ensure_dir(out);
      write_text(fs::path(out) / "gradcheck.csv", csv.str());
    }
    std::cout << (result.passed() ? "PASS" : "FAIL") << '\n';
    return result.passed() ? kExitOk : kExitVerification;
  }
};

// ------------------------------------------------------------------ encode

// Checkpoint-driven commands start from the run configuration stored in the
// checkpoint, so the training-time data and split are reproduced unless
// overridden.
struct CheckpointInput {
  std::unique_ptr<ConfigFlags> flags;
  std::string checkpoint;
  std::string out = "run";

  void attach(CLI::App* app) {
    flags = std::make_unique<ConfigFlags>(app);
    app->add_option("--checkpoint", checkpoint,
                    "Checkpoint file (default: <out>/checkpoint.uhck)");
    app->add_option("--out", out, "Output directory")->capture_default_str();
    add_data_flags(*flags);
    flags->value("--k", "eval.k");
  }

  fs::path checkpoint_path() const {
    return checkpoint.empty() ? fs::path(out) / "checkpoint.uhck"
                              : fs::path(checkpoint);
  }

  // Only data, split and evaluation keys may differ from the checkpoint.
  Checkpoint load() const {
    Checkpoint ck = Checkpoint::load(checkpoint_path());
    const RunConfig resolved = flags->resolve(ck.config);
    const auto before = ck.config.to_kv();
    const auto after = resolved.to_kv();
    for (size_t i = 0; i < before.size(); ++i) {
      const std::string& key = after[i].first;
      if (before[i].second == after[i].second) continue;
      if (key.rfind("data.", 0) == 0 || key.rfind("split.", 0) == 0 ||
          key.rfind("eval.", 0) == 0) {
        continue;
      }
      throw ConfigError("key " + key + " is fixed by the checkpoint");
    }
    resolved.validate();
    ck.config = resolved;
    return ck;
  }
};

struct EncodeCmd {
  CheckpointInput input;
  std::string codes;

  void attach(CLI::App* app) {
    input.attach(app);
    app->add_option("--codes", codes,
                    "Codes file (default: <out>/codes.txt); rows id;branch;hex");
  }

  int run() const {
    const Checkpoint ck = input.load();
    const PreparedData data = prepare_data(ck.config);
    if (ck.params.config.input_dim != data.dataset.feature_dim) {
      throw ConfigError("checkpoint expects input dimension " +
                        std::to_string(ck.params.config.input_dim) +
                        ", dataset has " +
                        std::to_string(data.dataset.feature_dim));
    }
    std::vector<size_t> all(data.dataset.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    const EncodedSet enc = encode_positions(ck.params, data.dataset, all);
    std::ostringstream text;
    for (size_t i = 0; i < all.size(); ++i) {
      const int64_t id = data.dataset.samples[i].id;
      text << id << ";center;" << to_hex(enc.center_bits[i]) << '\n';
      text << id << ";pairwise;" << to_hex(enc.pairwise_bits[i]) << '\n';
    }
    const fs::path path =
        codes.empty() ? fs::path(input.out) / "codes.txt" : fs::path(codes);
    write_text(path, text.str());
    std::cout << "encoded " << all.size() << " samples to " << path.string()
              << '\n';
    return kExitOk;
  }
};

// -------------------------------------------------------------------- eval

struct EvalCmd {
  CheckpointInput input;
  std::string protocol;

  void attach(CLI::App* app) {
    input.attach(app);
    app->add_option("--protocol", protocol,
                    "Print only this protocol (seen@seen, seen@all, "
                    "unseen@unseen, unseen@all)")
        ->check(CLI::IsMember({"seen@seen", "seen@all", "unseen@unseen",
                               "unseen@all"}));
  }

  int run() const {
    const Checkpoint ck = input.load();
    const PreparedData data = prepare_data(ck.config);
    const MetricsReport report = run_evaluation(ck, data);
    ensure_dir(input.out);
    write_reports(input.out, report);
    if (protocol.empty()) {
      print_summary(report);
    } else {
      const ProtocolMetrics& p = report.protocol(protocol);
      if (!p.available) {
        std::cerr << "warning: protocol " << protocol
                  << " is not available on this split\n";
      } else {
        std::cout << p.name << ": mAP@" << report.k << " center "
                  << format_double(p.map_center) << ", pairwise "
                  << format_double(p.map_pairwise) << ", selected "
                  << format_double(p.map_selected) << '\n';
      }
    }
    std::cout << "wrote metrics to " << input.out << '\n';
    return kExitOk;
  }
};

// ------------------------------------------------------------------- sweep

struct SweepCmd {
  std::unique_ptr<ConfigFlags> flags;
  std::string out = "sweep";
  std::string lambda1, lambda2, lambda3, experts, top_k;

  void attach(CLI::App* app) {
    flags = std::make_unique<ConfigFlags>(app);
    flags->value("--seed", "seed");
    app->add_option("--out", out, "Output directory")->capture_default_str();
    add_data_flags(*flags);
    add_model_flags(*flags);
    flags->value("--k", "eval.k");
    app->add_option("--lambda1-grid", lambda1, "Comma-separated lambda1 values");
    app->add_option("--lambda2-grid", lambda2, "Comma-separated lambda2 values");
    app->add_option("--lambda3-grid", lambda3, "Comma-separated lambda3 values");
    app->add_option("--experts-grid", experts,
                    "Comma-separated expert counts m");
    app->add_option("--top-k-grid", top_k, "Comma-separated top-k values");
  }

  struct Point {
    double lambda1, lambda2, lambda3;
    int experts, top_k;
  };

  int run() const {
    const RunConfig base = flags->resolve(RunConfig{});
    base.validate();
    if (lambda1.empty() && lambda2.empty() && lambda3.empty() &&
        experts.empty() && top_k.empty()) {
      throw ArgumentError("sweep: empty grid (give at least one --*-grid)");
    }
    auto axis = [](const std::string& text, double fallback,
                   const std::string& what) {
      return text.empty() ? std::vector<double>{fallback}
                          : parse_double_list(text, what);
    };
    auto int_axis = [](const std::string& text, int fallback,
                       const std::string& what) {
      return text.empty() ? std::vector<int>{fallback}
                          : parse_int_list(text, what);
    };
    const auto l1 = axis(lambda1, base.train.weights.center, "--lambda1-grid");
    const auto l2 = axis(lambda2, base.train.weights.pairwise, "--lambda2-grid");
    const auto l3 = axis(lambda3, base.train.weights.mutual, "--lambda3-grid");
    const auto ms =
        int_axis(experts, base.train.model.num_experts, "--experts-grid");
    const auto ks = int_axis(top_k, base.train.model.top_k, "--top-k-grid");

    std::vector<Point> points;
    std::vector<RunConfig> configs;
    for (double a : l1) {
      for (double b : l2) {
        for (double c : l3) {
          for (int m : ms) {
            for (int k : ks) {
              RunConfig cfg = base;
              cfg.train.weights = {a, b, c};
              cfg.train.model.num_experts = m;
              cfg.train.model.top_k = k;
              cfg.validate();
              points.push_back({a, b, c, m, k});
              configs.push_back(cfg);
            }
          }
        }
      }
    }

    const PreparedData data = prepare_data(base);
    std::vector<MetricsReport> reports(points.size());
    std::vector<std::exception_ptr> failures(points.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i = next++; i < points.size(); i = next++) {
        try {
          const TrainedRun run = run_training(configs[i], data);
          reports[i] = run_evaluation(run.checkpoint, data);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    const unsigned threads = worker_count(points.size());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    std::ostringstream csv;
    csv << "lambda1,lambda2,lambda3,num_experts,top_k,selected_branch,tau2";
    for (const char* name : kProtocolNames) csv << ",map_" << name;
    csv << '\n';
    for (size_t i = 0; i < points.size(); ++i) {
      const Point& p = points[i];
      const MetricsReport& r = reports[i];
      csv << format_double(p.lambda1) << ',' << format_double(p.lambda2) << ','
          << format_double(p.lambda3) << ',' << p.experts << ',' << p.top_k
          << ',' << to_string(r.selection.branch) << ','
          << format_double(r.tau2);
      for (const auto& pm : r.protocols) {
        csv << ',';
        if (pm.available) csv << format_double(pm.map_selected);
      }
      csv << '\n';
    }
    ensure_dir(out);
    write_text(fs::path(out) / "sweep.csv", csv.str());
    std::cout << "swept " << points.size() << " points with " << threads
              << " worker(s); wrote " << (fs::path(out) / "sweep.csv").string()
              << '\n';
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-branch deep hashing with a split-merge mixture of hash "
               "experts"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  GenDataCmd gen;
  TrainCmd train_cmd;
  GradCheckCmd grad;
  EncodeCmd encode;
  EvalCmd eval;
  SweepCmd sweep;

  auto* gen_app = app.add_subcommand("gen-data", "Write a synthetic dataset");
  auto* train_app = app.add_subcommand("train", "Train and write a checkpoint");
  auto* grad_app = app.add_subcommand(
      "gradcheck", "Compare analytic gradients with finite differences");
  auto* encode_app =
      app.add_subcommand("encode", "Export binary codes for every sample");
  auto* eval_app =
      app.add_subcommand("eval", "Retrieval metrics for every protocol");
  auto* sweep_app =
      app.add_subcommand("sweep", "Train and evaluate over a parameter grid");
  gen.attach(gen_app);
  train_cmd.attach(train_app);
  grad.attach(grad_app);
  encode.attach(encode_app);
  eval.attach(eval_app);
  sweep.attach(sweep_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_app) return gen.run();
    if (*train_app) return train_cmd.run();
    if (*grad_app) return grad.run();
    if (*encode_app) return encode.run();
    if (*eval_app) return eval.run();
    if (*sweep_app) return sweep.run();
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
