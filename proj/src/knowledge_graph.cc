// Copyright 2026 The kgaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kgaug/knowledge_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "kgaug/errors.hpp"
#include "kgaug/log.hpp"
#include "kgaug/text_io.hpp"

namespace kgaug {

std::int32_t Vocabulary::intern(std::string_view name) {
  std::string key(name);
  auto [it, inserted] = ids_.try_emplace(key, static_cast<std::int32_t>(names_.size()));
  if (inserted) names_.push_back(std::move(key));
  return it->second;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::size_t read_split(const std::filesystem::path& path, DatasetSplits& splits,
                       std::vector<Triplet>& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open triple file: " + path.string());
  std::unordered_set<Triplet, TripletHash> seen;
  std::size_t duplicates = 0;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto fields = split_fields(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) +
                       ": expected head<TAB>relation<TAB>tail, got " +
                       std::to_string(fields.size()) + " field(s)");
    }
    Triplet t{entity(splits.entities.intern(fields[0])), relation(splits.relations.intern(fields[1])),
              entity(splits.entities.intern(fields[2]))};
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      ++duplicates;
    }
  }
  if (in.bad()) throw IoError("read failure: " + path.string());
  if (duplicates > 0) {
    log_warning(path.string() + ": dropped " + std::to_string(duplicates) + " duplicate triple(s)");
  }
  return duplicates;
}

}  // namespace

DatasetSplits load_splits(const std::filesystem::path& train_path,
                          const std::filesystem::path& valid_path,
                          const std::filesystem::path& test_path) {
  DatasetSplits splits;
  splits.duplicates_dropped[0] = read_split(train_path, splits, splits.train);
  splits.duplicates_dropped[1] = read_split(valid_path, splits, splits.valid);
  splits.duplicates_dropped[2] = read_split(test_path, splits, splits.test);
  splits.raw_relation_count = splits.relations.size();
  return splits;
}

DatasetSplits add_reciprocals(DatasetSplits splits) {
  if (splits.reciprocal) throw ConfigError("reciprocal relations already added");
  const std::int32_t raw = splits.relations.size();
  for (const auto& name : splits.relations.names()) {
    if (name.ends_with(kReciprocalSuffix)) {
      throw ConfigError("relation '" + name + "' ends with reserved suffix '" +
                        std::string(kReciprocalSuffix) + "'");
    }
  }
  for (std::int32_t r = 0; r < raw; ++r) {
    const std::string name = splits.relations.name(r) + std::string(kReciprocalSuffix);
    splits.relations.intern(name);
  }
  for (auto* split : {&splits.train, &splits.valid, &splits.test}) {
    const std::size_t n = split->size();
    split->reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const Triplet t = (*split)[i];
      split->push_back({t.tail, reciprocal_of(t.relation, raw), t.head});
    }
  }
  splits.raw_relation_count = raw;
  splits.reciprocal = true;
  return splits;
}

RelationId KnowledgeGraph::reciprocal(RelationId r) const {
  if (!has_reciprocals()) throw ConfigError("graph has no reciprocal relations");
  return reciprocal_of(r, raw_relation_count_);
}

bool KnowledgeGraph::contains(EntityId head, RelationId r, EntityId tail) const {
  const auto row = tails(head, r);
  return std::binary_search(row.begin(), row.end(), index(tail));
}

std::span<const std::int32_t> KnowledgeGraph::tails(EntityId head, RelationId r) const {
  const auto& a = adjacency(r);
  const auto h = index(head);
  const auto* outer = a.outerIndexPtr();
  return {a.innerIndexPtr() + outer[h], static_cast<std::size_t>(outer[h + 1] - outer[h])};
}

std::span<const Edge> KnowledgeGraph::out_edges(EntityId e) const {
  const auto i = static_cast<std::size_t>(index(e));
  return std::span<const Edge>(out_edges_).subspan(out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]);
}

std::span<const Triplet> KnowledgeGraph::triplets_of(RelationId r) const {
  const auto i = static_cast<std::size_t>(index(r));
  return std::span<const Triplet>(triplets_).subspan(relation_offsets_[i],
                                                     relation_offsets_[i + 1] - relation_offsets_[i]);
}

bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  if (a.num_entities_ != b.num_entities_ || a.num_relations_ != b.num_relations_ ||
      a.raw_relation_count_ != b.raw_relation_count_ || a.triplets_ != b.triplets_) {
    return false;
  }
  for (std::size_t r = 0; r < a.adjacency_.size(); ++r) {
    const auto& x = a.adjacency_[r];
    const auto& y = b.adjacency_[r];
    if (x.nonZeros() != y.nonZeros()) return false;
    if (!std::equal(x.innerIndexPtr(), x.innerIndexPtr() + x.nonZeros(), y.innerIndexPtr())) return false;
    if (!std::equal(x.outerIndexPtr(), x.outerIndexPtr() + x.outerSize() + 1, y.outerIndexPtr())) return false;
  }
  return true;
}

KnowledgeGraph build_graph(std::span<const Triplet> triplets, std::int32_t num_entities,
                           std::int32_t num_relations, std::int32_t raw_relation_count) {
  if (num_entities < 0 || num_relations < 0) throw IndexError("negative vocabulary size");
  if (raw_relation_count > 0 && 2 * raw_relation_count != num_relations) {
    throw ConfigError("reciprocal graph needs exactly 2x raw relations");
  }
  KnowledgeGraph g;
  g.num_entities_ = num_entities;
  g.num_relations_ = num_relations;
  g.raw_relation_count_ = raw_relation_count;
  for (const auto& t : triplets) {
    if (index(t.head) < 0 || index(t.head) >= num_entities || index(t.tail) < 0 ||
        index(t.tail) >= num_entities || index(t.relation) < 0 || index(t.relation) >= num_relations) {
      throw IndexError("triplet (" + std::to_string(index(t.head)) + ", " + std::to_string(index(t.relation)) +
                       ", " + std::to_string(index(t.tail)) + ") out of range");
    }
  }
  g.triplets_.assign(triplets.begin(), triplets.end());
  std::sort(g.triplets_.begin(), g.triplets_.end(), RelationMajorLess{});
  g.triplets_.erase(std::unique(g.triplets_.begin(), g.triplets_.end()), g.triplets_.end());

  g.relation_offsets_.assign(static_cast<std::size_t>(num_relations) + 1, 0);
  for (const auto& t : g.triplets_) ++g.relation_offsets_[static_cast<std::size_t>(index(t.relation)) + 1];
  for (std::size_t r = 0; r < static_cast<std::size_t>(num_relations); ++r) {
    g.relation_offsets_[r + 1] += g.relation_offsets_[r];
  }

  g.adjacency_.reserve(static_cast<std::size_t>(num_relations));
  std::vector<Eigen::Triplet<bool, std::int32_t>> entries;
  for (std::int32_t r = 0; r < num_relations; ++r) {
    entries.clear();
    for (const auto& t : g.triplets_of(relation(r))) entries.emplace_back(index(t.head), index(t.tail), true);
    KnowledgeGraph::Adjacency a(num_entities, num_entities);
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();
    g.adjacency_.push_back(std::move(a));
  }

  g.out_offsets_.assign(static_cast<std::size_t>(num_entities) + 1, 0);
  for (const auto& t : g.triplets_) ++g.out_offsets_[static_cast<std::size_t>(index(t.head)) + 1];
  for (std::size_t e = 0; e < static_cast<std::size_t>(num_entities); ++e) g.out_offsets_[e + 1] += g.out_offsets_[e];
  g.out_edges_.resize(g.triplets_.size());
  std::vector<std::size_t> cursor(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
  for (const auto& t : g.triplets_) {
    g.out_edges_[cursor[static_cast<std::size_t>(index(t.head))]++] = Edge{t.relation, t.tail};
  }
  return g;
}

KnowledgeGraph training_graph(const DatasetSplits& splits) {
  return build_graph(splits.train, splits.entities.size(), splits.relations.size(),
                     splits.reciprocal ? splits.raw_relation_count : 0);
}

namespace {

void write_dict(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::int32_t i = 0; i < vocab.size(); ++i) out << i << '\t' << vocab.name(i) << '\n';
}

Vocabulary read_dict(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw ParseError(path.string() + ":" + std::to_string(line_number) + ": malformed entry");
    const auto id = vocab.intern(fields[1]);
    if (std::to_string(id) != fields[0]) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": ids must be contiguous from 0");
    }
  }
  return vocab;
}

void write_ids(const std::filesystem::path& path, std::span<const Triplet> triplets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : triplets) out << index(t.head) << '\t' << index(t.relation) << '\t' << index(t.tail) << '\n';
}

std::vector<Triplet> read_ids(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Triplet> out;
  std::int64_t h = 0, r = 0, t = 0;
  while (in >> h >> r >> t) out.push_back({entity(h), relation(r), entity(t)});
  if (!in.eof()) throw ParseError(path.string() + ": malformed id triple");
  return out;
}

}  // namespace

void save_dataset(const DatasetSplits& splits, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.txt", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "manifest.txt").string());
    out << "format=kgaug-dataset-1\n"
        << "entities=" << splits.entities.size() << '\n'
        << "relations=" << splits.relations.size() << '\n'
        << "raw_relations=" << splits.raw_relation_count << '\n'
        << "reciprocal=" << (splits.reciprocal ? 1 : 0) << '\n'
        << "reciprocal_suffix=" << kReciprocalSuffix << '\n'
        << "train=" << splits.train.size() << '\n'
        << "valid=" << splits.valid.size() << '\n'
        << "test=" << splits.test.size() << '\n'
        << "duplicates_train=" << splits.duplicates_dropped[0] << '\n'
        << "duplicates_valid=" << splits.duplicates_dropped[1] << '\n'
        << "duplicates_test=" << splits.duplicates_dropped[2] << '\n';
  }
  write_dict(dir / "entities.dict", splits.entities);
  write_dict(dir / "relations.dict", splits.relations);
  write_ids(dir / "train.ids", splits.train);
  write_ids(dir / "valid.ids", splits.valid);
  write_ids(dir / "test.ids", splits.test);
}

DatasetSplits load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt", std::ios::binary);
  if (!in) throw IoError("cannot open " + (dir / "manifest.txt").string());
  std::unordered_map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("manifest line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> long long {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("manifest missing key: " + key);
    return std::stoll(it->second);
  };
  DatasetSplits splits;
  splits.entities = read_dict(dir / "entities.dict");
  splits.relations = read_dict(dir / "relations.dict");
  splits.train = read_ids(dir / "train.ids");
  splits.valid = read_ids(dir / "valid.ids");
  splits.test = read_ids(dir / "test.ids");
  splits.raw_relation_count = static_cast<std::int32_t>(get("raw_relations"));
  splits.reciprocal = get("reciprocal") != 0;
  splits.duplicates_dropped = {static_cast<std::size_t>(get("duplicates_train")),
                               static_cast<std::size_t>(get("duplicates_valid")),
                               static_cast<std::size_t>(get("duplicates_test"))};
  if (get("entities") != splits.entities.size() || get("relations") != splits.relations.size() ||
      get("train") != static_cast<long long>(splits.train.size()) ||
      get("valid") != static_cast<long long>(splits.valid.size()) ||
      get("test") != static_cast<long long>(splits.test.size())) {
    throw ParseError("dataset manifest counts disagree with files in " + dir.string());
  }
  return splits;
}

}  // namespace kgaug
