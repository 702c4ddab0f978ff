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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kgaug/knowledge_graph.hpp"
#include "kgaug/rule_miner.hpp"

namespace kgaug {

/// (anchor, relation, ?). Tail-side queries are head queries over the reciprocal relation.
struct Query {
  EntityId anchor{};
  RelationId relation{};

  friend auto operator<=>(const Query&, const Query&) = default;
};

struct WeightedTriplet {
  Triplet triplet;
  double weight = 0.0;

  friend bool operator==(const WeightedTriplet&, const WeightedTriplet&) = default;
};

/// Canonical order: (relation, head, weight desc, tail).
bool augmented_order_less(const WeightedTriplet& a, const WeightedTriplet& b);

struct FilterConfig {
  double conf_th = 0.0;
  std::int64_t top_n = 5;

  void validate() const;
};

/// Applies each rule of the query relation from the anchor. A reached entity e
/// yields (anchor, r, e) unless the triplet is already in `graph`; its weight is
/// the highest confidence over every rule and query producing it. Rules with
/// zero confidence produce nothing. Output is deduplicated, canonical order.
std::vector<WeightedTriplet> generate_candidates(const KnowledgeGraph& graph, const RuleSet& rules,
                                                 std::span<const Query> queries, int threads = 0);

/// Drops weight < conf_th, then keeps for each query at most
/// max(0, top_n - k) candidates by (weight desc, tail asc), where k counts the
/// query's matches in `training`. Candidates matching no query are dropped.
std::vector<WeightedTriplet> filter_candidates(std::span<const WeightedTriplet> candidates,
                                               const KnowledgeGraph& training, std::span<const Query> queries,
                                               const FilterConfig& cfg);

/// One query per triplet, tail masked.
std::vector<Query> queries_from_split(std::span<const Triplet> split);

/// Entity uniform over E, relation proportional to its training triplet count.
std::vector<Query> random_queries(const KnowledgeGraph& graph, std::size_t count, std::uint64_t seed);

/// Query counts: all, with >= 1 augmented match (w/aug), with the gold
/// triplet among the augmented ones (w/true). Counts are over the query list
/// (duplicates included).
struct QueryCoverage {
  std::size_t all = 0;
  std::size_t with_augmented = 0;
  std::size_t with_true = 0;
};

QueryCoverage query_coverage(std::span<const Triplet> gold, std::span<const WeightedTriplet> augmented);

// head<TAB>relation<TAB>tail<TAB>weight(%.17g), canonical order.
void write_augmented(const std::filesystem::path& path, std::span<const WeightedTriplet> triplets,
                     const Vocabulary& entities, const Vocabulary& relations);
std::vector<WeightedTriplet> read_augmented(const std::filesystem::path& path, const Vocabulary& entities,
                                            const Vocabulary& relations);

// anchor<TAB>relation
void write_queries(const std::filesystem::path& path, std::span<const Query> queries, const Vocabulary& entities,
                   const Vocabulary& relations);
std::vector<Query> read_queries(const std::filesystem::path& path, const Vocabulary& entities,
                                const Vocabulary& relations);

}  // namespace kgaug
