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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kgaug/knowledge_graph.hpp"

namespace kgaug {

/// A relation sequence (r1, ..., rn); exists from e0 to en when a ground chain
/// (e0, r1, e1), ..., (e_{n-1}, rn, en) is in the graph.
struct RelationPath {
  std::vector<RelationId> relations;

  std::size_t size() const { return relations.size(); }
  bool empty() const { return relations.empty(); }

  friend auto operator<=>(const RelationPath&, const RelationPath&) = default;
  friend bool operator==(const RelationPath&, const RelationPath&) = default;
};

struct RelationPathHash {
  std::size_t operator()(const RelationPath& p) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto r : p.relations) h = (h ^ static_cast<std::uint32_t>(index(r))) * 0x100000001b3ULL;
    return static_cast<std::size_t>(h);
  }
};

/// Scratch buffers for repeated reachability queries over one graph.
class ReachWorkspace {
 public:
  explicit ReachWorkspace(std::int32_t num_entities)
      : mark_(static_cast<std::size_t>(num_entities), 0) {}

  /// Boolean row-vector propagation of the start indicator through A_{r1} ... A_{rn}.
  /// Returns reached entity ids in ascending order.
  std::span<const std::int32_t> reach(const KnowledgeGraph& graph, EntityId start, const RelationPath& path);

 private:
  std::vector<std::uint8_t> mark_;
  std::vector<std::int32_t> frontier_;
  std::vector<std::int32_t> next_;
};

/// { e : path(start, e) }, ascending. path must be non-empty.
std::vector<EntityId> reach_set(const KnowledgeGraph& graph, EntityId start, const RelationPath& path);

}  // namespace kgaug
