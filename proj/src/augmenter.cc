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

#include "kgaug/augmenter.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "kgaug/errors.hpp"
#include "kgaug/random.hpp"
#include "kgaug/reachability.hpp"
#include "kgaug/text_io.hpp"

namespace kgaug {

bool augmented_order_less(const WeightedTriplet& a, const WeightedTriplet& b) {
  const auto& x = a.triplet;
  const auto& y = b.triplet;
  if (x.relation != y.relation) return x.relation < y.relation;
  if (x.head != y.head) return x.head < y.head;
  if (a.weight != b.weight) return a.weight > b.weight;
  return x.tail < y.tail;
}

void FilterConfig::validate() const {
  if (!(conf_th >= 0.0 && conf_th <= 1.0)) throw ConfigError("confTh must lie in [0,1]");
  if (top_n <= 0) throw ConfigError("topN must be positive");
}

namespace {

std::vector<Query> unique_queries(std::span<const Query> queries) {
  std::vector<Query> out(queries.begin(), queries.end());
  std::sort(out.begin(), out.end(), [](const Query& a, const Query& b) {
    return a.relation != b.relation ? a.relation < b.relation : a.anchor < b.anchor;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<WeightedTriplet> generate_candidates(const KnowledgeGraph& graph, const RuleSet& rules,
                                                 std::span<const Query> queries, int threads) {
  const auto uniq = unique_queries(queries);
  // Group boundaries per relation.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    if (i == 0 || uniq[i].relation != uniq[i - 1].relation) starts.push_back(i);
  }
  starts.push_back(uniq.size());
  const std::size_t groups = starts.size() - 1;
  std::vector<std::vector<WeightedTriplet>> per_group(groups);

  auto run_group = [&](std::size_t g) {
    const RelationId r = uniq[starts[g]].relation;
    if (index(r) < 0 || index(r) >= static_cast<std::int32_t>(rules.by_relation.size())) return;
    const auto& rel_rules = rules.of(r);
    if (rel_rules.empty()) return;
    ReachWorkspace ws(graph.num_entities());
    std::unordered_map<Triplet, double, TripletHash> best;
    for (std::size_t q = starts[g]; q < starts[g + 1]; ++q) {
      const EntityId anchor = uniq[q].anchor;
      for (const auto& rule : rel_rules) {
        if (!(rule.confidence > 0.0)) continue;
        for (const auto e : ws.reach(graph, anchor, rule.path)) {
          if (graph.contains(anchor, r, entity(e))) continue;
          auto [it, inserted] = best.try_emplace(Triplet{anchor, r, entity(e)}, rule.confidence);
          if (!inserted) it->second = std::max(it->second, rule.confidence);
        }
      }
    }
    auto& out = per_group[g];
    out.reserve(best.size());
    for (const auto& [t, w] : best) out.push_back({t, w});
  };

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(groups)));
  if (workers <= 1) {
    for (std::size_t g = 0; g < groups; ++g) run_group(g);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t g = next++; g < groups; g = next++) run_group(g);
      });
    }
  }

  std::vector<WeightedTriplet> out;
  for (auto& group : per_group) out.insert(out.end(), group.begin(), group.end());
  std::sort(out.begin(), out.end(), augmented_order_less);
  return out;
}

std::vector<WeightedTriplet> filter_candidates(std::span<const WeightedTriplet> candidates,
                                               const KnowledgeGraph& training, std::span<const Query> queries,
                                               const FilterConfig& cfg) {
  cfg.validate();
  std::map<Query, std::vector<std::size_t>> by_query;
  for (const auto& q : unique_queries(queries)) by_query.try_emplace(q);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.weight < cfg.conf_th) continue;
    auto it = by_query.find(Query{c.triplet.head, c.triplet.relation});
    if (it != by_query.end()) it->second.push_back(i);
  }
  std::vector<std::uint8_t> keep(candidates.size(), 0);
  for (auto& [query, matches] : by_query) {
    const auto k = static_cast<std::int64_t>(training.tails(query.anchor, query.relation).size());
    const auto budget = static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.top_n - k));
    if (budget == 0 || matches.empty()) continue;
    std::sort(matches.begin(), matches.end(), [&](std::size_t a, std::size_t b) {
      if (candidates[a].weight != candidates[b].weight) return candidates[a].weight > candidates[b].weight;
      return candidates[a].triplet.tail < candidates[b].triplet.tail;
    });
    for (std::size_t i = 0; i < std::min(budget, matches.size()); ++i) keep[matches[i]] = 1;
  }
  std::vector<WeightedTriplet> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (keep[i]) out.push_back(candidates[i]);
  }
  std::sort(out.begin(), out.end(), augmented_order_less);
  return out;
}

std::vector<Query> queries_from_split(std::span<const Triplet> split) {
  std::vector<Query> out;
  out.reserve(split.size());
  for (const auto& t : split) out.push_back({t.head, t.relation});
  return out;
}

std::vector<Query> random_queries(const KnowledgeGraph& graph, std::size_t count, std::uint64_t seed) {
  std::vector<Query> out;
  if (count == 0) return out;
  if (graph.num_entities() == 0 || graph.num_triplets() == 0) {
    throw ConfigError("random queries need a non-empty training graph");
  }
  std::vector<double> weights(static_cast<std::size_t>(graph.num_relations()));
  for (std::int32_t r = 0; r < graph.num_relations(); ++r) {
    weights[static_cast<std::size_t>(r)] = static_cast<double>(graph.count(relation(r)));
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::int32_t> pick_entity(0, graph.num_entities() - 1);
  std::discrete_distribution<std::int32_t> pick_relation(weights.begin(), weights.end());
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto e = pick_entity(rng);
    const auto r = pick_relation(rng);
    out.push_back({entity(e), relation(r)});
  }
  return out;
}

QueryCoverage query_coverage(std::span<const Triplet> gold, std::span<const WeightedTriplet> augmented) {
  std::unordered_set<Triplet, TripletHash> aug_set;
  std::set<Query> aug_queries;
  for (const auto& w : augmented) {
    aug_set.insert(w.triplet);
    aug_queries.insert({w.triplet.head, w.triplet.relation});
  }
  QueryCoverage c;
  c.all = gold.size();
  for (const auto& t : gold) {
    if (aug_queries.contains({t.head, t.relation})) ++c.with_augmented;
    if (aug_set.contains(t)) ++c.with_true;
  }
  return c;
}

namespace {

std::int32_t lookup(const Vocabulary& vocab, std::string_view name, const std::filesystem::path& path,
                    std::size_t line_number, const char* kind) {
  auto id = vocab.find(name);
  if (!id) {
    throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": unknown " + kind + " '" +
                      std::string(name) + "'");
  }
  return *id;
}

}  // namespace

void write_augmented(const std::filesystem::path& path, std::span<const WeightedTriplet> triplets,
                     const Vocabulary& entities, const Vocabulary& relations) {
  std::vector<WeightedTriplet> sorted(triplets.begin(), triplets.end());
  std::sort(sorted.begin(), sorted.end(), augmented_order_less);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write augmented triples: " + path.string());
  for (const auto& w : sorted) {
    out << entities.name(index(w.triplet.head)) << '\t' << relations.name(index(w.triplet.relation)) << '\t'
        << entities.name(index(w.triplet.tail)) << '\t' << format_g17(w.weight) << '\n';
  }
  if (!out) throw IoError("write failure: " + path.string());
}

std::vector<WeightedTriplet> read_augmented(const std::filesystem::path& path, const Vocabulary& entities,
                                            const Vocabulary& relations) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open augmented triples: " + path.string());
  std::vector<WeightedTriplet> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto f = split_fields(line);
    if (f.size() != 4) throw ParseError(path.string() + ":" + std::to_string(line_number) + ": expected 4 fields");
    WeightedTriplet w;
    w.triplet = {entity(lookup(entities, f[0], path, line_number, "entity")),
                 relation(lookup(relations, f[1], path, line_number, "relation")),
                 entity(lookup(entities, f[2], path, line_number, "entity"))};
    try {
      w.weight = std::stod(std::string(f[3]));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": bad weight");
    }
    if (!(w.weight > 0.0 && w.weight <= 1.0)) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": weight outside (0,1]");
    }
    out.push_back(w);
  }
  return out;
}

void write_queries(const std::filesystem::path& path, std::span<const Query> queries, const Vocabulary& entities,
                   const Vocabulary& relations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write queries: " + path.string());
  for (const auto& q : queries) out << entities.name(index(q.anchor)) << '\t' << relations.name(index(q.relation)) << '\n';
}

std::vector<Query> read_queries(const std::filesystem::path& path, const Vocabulary& entities,
                                const Vocabulary& relations) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open queries: " + path.string());
  std::vector<Query> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto f = split_fields(line);
    if (f.size() != 2) throw ParseError(path.string() + ":" + std::to_string(line_number) + ": expected 2 fields");
    out.push_back({entity(lookup(entities, f[0], path, line_number, "entity")),
                   relation(lookup(relations, f[1], path, line_number, "relation"))});
  }
  return out;
}

}  // namespace kgaug
