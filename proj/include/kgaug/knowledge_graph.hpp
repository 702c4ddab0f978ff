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

#pragma once

#include <Eigen/SparseCore>

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgaug {

enum class EntityId : std::int32_t {};
enum class RelationId : std::int32_t {};

constexpr std::int32_t index(EntityId e) { return static_cast<std::int32_t>(e); }
constexpr std::int32_t index(RelationId r) { return static_cast<std::int32_t>(r); }
constexpr EntityId entity(std::int64_t i) { return static_cast<EntityId>(i); }
constexpr RelationId relation(std::int64_t i) { return static_cast<RelationId>(i); }

struct Triplet {
  EntityId head{};
  RelationId relation{};
  EntityId tail{};

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

// Orders by (relation, head, tail); the layout of per-relation triplet blocks.
struct RelationMajorLess {
  bool operator()(const Triplet& a, const Triplet& b) const {
    if (a.relation != b.relation) return a.relation < b.relation;
    if (a.head != b.head) return a.head < b.head;
    return a.tail < b.tail;
  }
};

struct TripletHash {
  std::size_t operator()(const Triplet& t) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(index(t.head));
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(index(t.relation));
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(index(t.tail));
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

/// Bidirectional string <-> dense id map. Ids are assigned in interning order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name);
  std::optional<std::int32_t> find(std::string_view name) const;
  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
  std::span<const std::string> names() const { return names_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

/// Reserved token appended to a relation name to form its reciprocal.
inline constexpr std::string_view kReciprocalSuffix = "__inv";

struct DatasetSplits {
  Vocabulary entities;
  Vocabulary relations;
  std::vector<Triplet> train;
  std::vector<Triplet> valid;
  std::vector<Triplet> test;
  // Relation count before reciprocal expansion; equals relations.size() until then.
  std::int32_t raw_relation_count = 0;
  bool reciprocal = false;
  // Duplicate lines dropped per split (train, valid, test).
  std::array<std::size_t, 3> duplicates_dropped{};
};

/// Parses three tab-separated triple files sharing one vocabulary.
/// Throws IoError for missing files and ParseError (with line number) for
/// lines that do not have exactly three non-empty fields.
DatasetSplits load_splits(const std::filesystem::path& train_path,
                          const std::filesystem::path& valid_path,
                          const std::filesystem::path& test_path);

/// Adds r + kReciprocalSuffix for every raw relation and (t, r', h) for every
/// (h, r, t) in each split. Reciprocal of raw relation r gets id r + |R0|.
DatasetSplits add_reciprocals(DatasetSplits splits);

/// Maps a relation to its reciprocal given the raw relation count.
constexpr RelationId reciprocal_of(RelationId r, std::int32_t raw_relation_count) {
  const auto i = index(r);
  return relation(i < raw_relation_count ? i + raw_relation_count : i - raw_relation_count);
}

struct Edge {
  RelationId relation;
  EntityId tail;
};

/// Immutable triplet store with one boolean |E|x|E| adjacency matrix per relation.
class KnowledgeGraph {
 public:
  using Adjacency = Eigen::SparseMatrix<bool, Eigen::RowMajor, std::int32_t>;

  KnowledgeGraph() = default;

  std::int32_t num_entities() const { return num_entities_; }
  std::int32_t num_relations() const { return num_relations_; }
  std::size_t num_triplets() const { return triplets_.size(); }

  // Zero when the graph was built without reciprocal relations.
  std::int32_t raw_relation_count() const { return raw_relation_count_; }
  bool has_reciprocals() const { return raw_relation_count_ > 0; }
  RelationId reciprocal(RelationId r) const;

  const Adjacency& adjacency(RelationId r) const { return adjacency_.at(static_cast<std::size_t>(index(r))); }
  bool contains(EntityId head, RelationId r, EntityId tail) const;
  bool contains(const Triplet& t) const { return contains(t.head, t.relation, t.tail); }

  // Sorted tail ids of (head, r, .); a view into the adjacency row.
  std::span<const std::int32_t> tails(EntityId head, RelationId r) const;
  std::span<const Edge> out_edges(EntityId e) const;

  // Sorted by (relation, head, tail), duplicates removed.
  std::span<const Triplet> triplets() const { return triplets_; }
  std::span<const Triplet> triplets_of(RelationId r) const;
  std::size_t count(RelationId r) const { return triplets_of(r).size(); }

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b);

 private:
  friend KnowledgeGraph build_graph(std::span<const Triplet>, std::int32_t, std::int32_t, std::int32_t);

  std::int32_t num_entities_ = 0;
  std::int32_t num_relations_ = 0;
  std::int32_t raw_relation_count_ = 0;
  std::vector<Triplet> triplets_;
  std::vector<std::size_t> relation_offsets_;
  std::vector<Adjacency> adjacency_;
  std::vector<std::size_t> out_offsets_;
  std::vector<Edge> out_edges_;
};

/// Builds the graph. raw_relation_count > 0 declares relations [raw, 2*raw) to
/// be reciprocals of [0, raw). Throws IndexError on out-of-range ids.
KnowledgeGraph build_graph(std::span<const Triplet> triplets, std::int32_t num_entities,
                           std::int32_t num_relations, std::int32_t raw_relation_count = 0);

/// Training graph of an (optionally reciprocal-expanded) dataset.
KnowledgeGraph training_graph(const DatasetSplits& splits);

// Dataset bundle on disk: manifest.txt (key=value), entities.dict and
// relations.dict (id<TAB>name), train.ids / valid.ids / test.ids (h<TAB>r<TAB>t).
void save_dataset(const DatasetSplits& splits, const std::filesystem::path& dir);
DatasetSplits load_dataset(const std::filesystem::path& dir);

}  // namespace kgaug
