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

#include "kgaug/reachability.hpp"

#include <algorithm>

#include "kgaug/errors.hpp"

namespace kgaug {

std::span<const std::int32_t> ReachWorkspace::reach(const KnowledgeGraph& graph, EntityId start,
                                                    const RelationPath& path) {
  if (path.empty()) throw ConfigError("reachability needs a non-empty relation path");
  if (mark_.size() != static_cast<std::size_t>(graph.num_entities())) {
    mark_.assign(static_cast<std::size_t>(graph.num_entities()), 0);
  }
  frontier_.assign(1, index(start));
  for (const auto r : path.relations) {
    next_.clear();
    for (const auto e : frontier_) {
      for (const auto t : graph.tails(entity(e), r)) {
        if (!mark_[static_cast<std::size_t>(t)]) {
          mark_[static_cast<std::size_t>(t)] = 1;
          next_.push_back(t);
        }
      }
    }
    for (const auto t : next_) mark_[static_cast<std::size_t>(t)] = 0;
    frontier_.swap(next_);
    if (frontier_.empty()) break;
  }
  std::sort(frontier_.begin(), frontier_.end());
  return frontier_;
}

std::vector<EntityId> reach_set(const KnowledgeGraph& graph, EntityId start, const RelationPath& path) {
  ReachWorkspace ws(graph.num_entities());
  const auto reached = ws.reach(graph, start, path);
  std::vector<EntityId> out;
  out.reserve(reached.size());
  for (const auto e : reached) out.push_back(entity(e));
  return out;
}

}  // namespace kgaug
