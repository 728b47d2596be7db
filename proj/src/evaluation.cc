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

#include "unihash/evaluation.h"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "unihash/errors.h"
#include "unihash/format.h"

namespace unihash {
namespace {

std::string fmt(double v) { return format_double(v); }

// Maps dataset positions onto rows of an EncodedSet.
class Lookup {
 public:
  explicit Lookup(const EncodedSet& set) : set_(set) {
    for (size_t i = 0; i < set.positions.size(); ++i) row_[set.positions[i]] = i;
  }

  std::vector<PackedCode> bits(const std::vector<size_t>& positions,
                               Branch branch) const {
    std::vector<PackedCode> out;
    out.reserve(positions.size());
    const auto& src =
        branch == Branch::kCenter ? set_.center_bits : set_.pairwise_bits;
    for (size_t p : positions) out.push_back(src[row_.at(p)]);
    return out;
  }

  PackedCodeIndex index(const Dataset& ds, const std::vector<size_t>& positions,
                        Branch branch) const {
    std::vector<int64_t> ids;
    LabelMatrix labels;
    for (size_t p : positions) {
      ids.push_back(ds.samples[p].id);
      labels.push_back(ds.samples[p].labels);
    }
    return PackedCodeIndex(bits(positions, branch), std::move(ids),
                           std::move(labels));
  }

 private:
  const EncodedSet& set_;
  std::map<size_t, size_t> row_;
};

LabelMatrix labels_of(const Dataset& ds, const std::vector<size_t>& positions) {
  LabelMatrix out;
  out.reserve(positions.size());
  for (size_t p : positions) out.push_back(ds.samples[p].labels);
  return out;
}

double branch_map(const Lookup& lookup, const Dataset& ds,
                  const std::vector<size_t>& queries,
                  const std::vector<size_t>& database, Branch branch,
                  size_t k) {
  return mean_average_precision(lookup.bits(queries, branch),
                                labels_of(ds, queries),
                                lookup.index(ds, database, branch), k);
}

BranchSelection select_with(const Lookup& lookup, const Dataset& ds,
                            const SplitDataset& split, size_t k) {
  if (split.val_query.empty() || split.train.empty()) {
    throw ProtocolError("branch selection needs validation queries and a "
                        "non-empty training pool");
  }
  return choose_branch(
      branch_map(lookup, ds, split.val_query, split.train, Branch::kCenter, k),
      branch_map(lookup, ds, split.val_query, split.train, Branch::kPairwise,
                 k));
}

}  // namespace

EncodedSet encode_positions(const ModelParams& params, const Dataset& ds,
                            const std::vector<size_t>& positions) {
  EncodedSet set;
  set.positions = positions;
  for (size_t p : positions) {
    const Sample& s = ds.samples.at(p);
    if (s.features.size() != static_cast<size_t>(params.config.input_dim)) {
      throw ShapeError("sample dimension does not match the model input");
    }
    CodePair cp = encode(params, s.features);
    set.center_bits.push_back(binarize(cp.u_c));
    set.pairwise_bits.push_back(binarize(cp.u_p));
    set.center.push_back(std::move(cp.u_c));
    set.pairwise.push_back(std::move(cp.u_p));
  }
  return set;
}

BranchSelection select_branch(const ModelParams& params, const Dataset& ds,
                              const SplitDataset& split, size_t k) {
  std::vector<size_t> positions = split.val_query;
  positions.insert(positions.end(), split.train.begin(), split.train.end());
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()),
                  positions.end());
  EncodedSet set = encode_positions(params, ds, positions);
  return select_with(Lookup(set), ds, split, k);
}

const ProtocolMetrics& MetricsReport::protocol(const std::string& name) const {
  for (const auto& p : protocols) {
    if (p.name == name) return p;
  }
  throw ArgumentError("unknown protocol '" + name + "'");
}

MetricsReport evaluate_protocols(const ModelParams& params, const Dataset& ds,
                                 const SplitDataset& split,
                                 const ProtocolSets& protocols, size_t k) {
  std::vector<size_t> positions;
  for (const auto* list : {&split.val_query, &split.train, &split.query_seen,
                           &split.query_unseen, &split.db_all}) {
    positions.insert(positions.end(), list->begin(), list->end());
  }
  for (const Protocol* p : protocols.available()) {
    positions.insert(positions.end(), p->queries.begin(), p->queries.end());
    positions.insert(positions.end(), p->database.begin(), p->database.end());
  }
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()),
                  positions.end());

  const EncodedSet set = encode_positions(params, ds, positions);
  const Lookup lookup(set);

  MetricsReport report;
  report.k = k;
  report.selection = select_with(lookup, ds, split, k);

  std::vector<size_t> all_queries = split.query_seen;
  all_queries.insert(all_queries.end(), split.query_unseen.begin(),
                     split.query_unseen.end());
  {
    CodeMatrix c, p;
    std::map<size_t, size_t> row;
    for (size_t i = 0; i < set.positions.size(); ++i) row[set.positions[i]] = i;
    for (size_t q : all_queries) {
      c.push_back(set.center[row.at(q)]);
      p.push_back(set.pairwise[row.at(q)]);
    }
    report.tau2 = consistency_tau2(c, p);
  }

  for (const char* name : kProtocolNames) {
    ProtocolMetrics m;
    m.name = name;
    const auto& proto = protocols.by_name(name);
    if (proto.has_value()) {
      m.available = true;
      m.num_queries = proto->queries.size();
      m.db_size = proto->database.size();
      const auto qlabels = labels_of(ds, proto->queries);
      for (Branch b : {Branch::kCenter, Branch::kPairwise}) {
        const auto qbits = lookup.bits(proto->queries, b);
        const auto index = lookup.index(ds, proto->database, b);
        const double map = mean_average_precision(qbits, qlabels, index, k);
        auto curve = pr_curve(qbits, qlabels, index);
        if (b == Branch::kCenter) {
          m.map_center = map;
          m.pr_center = std::move(curve);
        } else {
          m.map_pairwise = map;
          m.pr_pairwise = std::move(curve);
        }
      }
      m.map_selected = report.selection.branch == Branch::kCenter
                           ? m.map_center
                           : m.map_pairwise;
    }
    report.protocols.push_back(std::move(m));
  }
  return report;
}

nlohmann::json metrics_json(const MetricsReport& report) {
  nlohmann::json doc;
  doc["k"] = report.k;
  doc["selected_branch"] = to_string(report.selection.branch);
  doc["validation"] = {{"map_center", report.selection.map_center},
                       {"map_pairwise", report.selection.map_pairwise}};
  doc["tau2"] = report.tau2;
  nlohmann::json protos = nlohmann::json::object();
  for (const auto& p : report.protocols) {
    if (!p.available) {
      protos[p.name] = {{"available", false}};
      continue;
    }
    auto curve = [](const std::vector<PrPoint>& pts) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& pt : pts) {
        arr.push_back({{"radius", pt.radius},
                       {"precision", pt.precision},
                       {"recall", pt.recall}});
      }
      return arr;
    };
    protos[p.name] = {{"available", true},
                      {"num_queries", p.num_queries},
                      {"db_size", p.db_size},
                      {"map_center", p.map_center},
                      {"map_pairwise", p.map_pairwise},
                      {"map_selected", p.map_selected},
                      {"pr_center", curve(p.pr_center)},
                      {"pr_pairwise", curve(p.pr_pairwise)}};
  }
  doc["protocols"] = protos;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : report.config) cfg[k] = v;
  doc["config"] = cfg;
  return doc;
}

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "protocol,branch,k,map\n";
  for (const auto& p : report.protocols) {
    if (!p.available) continue;
    out << p.name << ",center," << report.k << ',' << fmt(p.map_center) << '\n';
    out << p.name << ",pairwise," << report.k << ',' << fmt(p.map_pairwise)
        << '\n';
    out << p.name << ",selected," << report.k << ',' << fmt(p.map_selected)
        << '\n';
  }
  return out.str();
}

std::string pr_curve_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "protocol,branch,radius,precision,recall\n";
  for (const auto& p : report.protocols) {
    if (!p.available) continue;
    for (Branch b : {Branch::kCenter, Branch::kPairwise}) {
      const auto& curve = b == Branch::kCenter ? p.pr_center : p.pr_pairwise;
      for (const auto& pt : curve) {
        out << p.name << ',' << to_string(b) << ',' << pt.radius << ','
            << fmt(pt.precision) << ',' << fmt(pt.recall) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace unihash
