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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "kgaug/knowledge_graph.hpp"
#include "kgaug/random.hpp"
#include "kgaug/reachability.hpp"

namespace kgaug {

struct MiningConfig {
  std::int64_t sample_num = 6000;
  std::int64_t max_length = 3;
  std::int64_t try_num = 10000;
  std::int64_t top_rules = 1000;
  std::uint64_t seed = 0;
  // Worker threads for per-relation mining; 0 picks hardware concurrency.
  int threads = 0;

  void validate() const;
};

/// An alternating entity/relation sequence (e0, r1, e1, ..., rl, el).
struct Walk {
  std::vector<EntityId> nodes;
  std::vector<RelationId> relations;

  EntityId end() const { return nodes.back(); }
};

/// Uniform random walk over outgoing edges. Returns nullopt when a node with
/// no outgoing edge is reached before `length` steps.
std::optional<Walk> random_walk(const KnowledgeGraph& graph, EntityId start, std::int64_t length, Rng& rng);

/// Bidirectional random-walk path harvesting for one target relation. The
/// graph must carry reciprocal relations: tail-side walks are reversed by
/// mapping each step to its reciprocal. The zero-length walk at each endpoint
/// takes part in the merge, so single-relation paths are found too.
/// Returns distinct paths in ascending order, excluding (target).
std::vector<RelationPath> mine_paths(const KnowledgeGraph& graph, RelationId target, const MiningConfig& cfg,
                                     Rng& rng);

/// Pair counts behind the PCWA confidence of `path` for `target`.
struct ConfidenceCounts {
  std::size_t support = 0;  // pairs with path(e0, en) and (e0, target, en)
  std::size_t body = 0;     // pairs with path(e0, en) and some (e0, target, e')
};

ConfidenceCounts confidence_counts(const KnowledgeGraph& graph, RelationId target, const RelationPath& path);

/// support / body, or nullopt when body is empty (the rule is undefined).
std::optional<double> confidence(const KnowledgeGraph& graph, RelationId target, const RelationPath& path);

struct Rule {
  RelationId target{};
  RelationPath path;
  double confidence = 0.0;
};

/// Rank order: confidence descending, then shorter path, then lexicographic.
bool rule_rank_less(const Rule& a, const Rule& b);

struct RuleSet {
  std::vector<std::vector<Rule>> by_relation;

  explicit RuleSet(std::int32_t num_relations = 0) : by_relation(static_cast<std::size_t>(num_relations)) {}

  const std::vector<Rule>& of(RelationId r) const { return by_relation.at(static_cast<std::size_t>(index(r))); }
  std::vector<Rule>& of(RelationId r) { return by_relation.at(static_cast<std::size_t>(index(r))); }
  std::size_t total() const;
};

/// Mines, scores and truncates rules for every relation with at least one
/// triplet. Each relation draws from its own stream derive_seed(cfg.seed, r),
/// so output does not depend on thread count.
RuleSet mine_rules(const KnowledgeGraph& graph, const MiningConfig& cfg);

// Rules file: target<TAB>confidence(%.17g)<TAB>r1,r2,... ordered by relation id, then rank.
void write_rules(const std::filesystem::path& path, const RuleSet& rules, const Vocabulary& relations);
RuleSet read_rules(const std::filesystem::path& path, const Vocabulary& relations);

}  // namespace kgaug
