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

#include "kgaug/rule_miner.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "kgaug/errors.hpp"
#include "kgaug/log.hpp"
#include "kgaug/text_io.hpp"

namespace kgaug {

void MiningConfig::validate() const {
  if (sample_num <= 0) throw ConfigError("mining.sample_num must be positive");
  if (max_length <= 0) throw ConfigError("mining.max_length must be positive");
  if (try_num <= 0) throw ConfigError("mining.try_num must be positive");
  if (top_rules <= 0) throw ConfigError("mining.top_rules must be positive");
  if (threads < 0) throw ConfigError("mining.threads must be non-negative");
}

std::optional<Walk> random_walk(const KnowledgeGraph& graph, EntityId start, std::int64_t length, Rng& rng) {
  if (length < 1) throw ConfigError("walk length must be at least 1");
  Walk walk;
  walk.nodes.reserve(static_cast<std::size_t>(length) + 1);
  walk.relations.reserve(static_cast<std::size_t>(length));
  walk.nodes.push_back(start);
  EntityId current = start;
  for (std::int64_t step = 0; step < length; ++step) {
    const auto edges = graph.out_edges(current);
    if (edges.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
    const Edge& e = edges[pick(rng)];
    walk.relations.push_back(e.relation);
    walk.nodes.push_back(e.tail);
    current = e.tail;
  }
  return walk;
}

namespace {

// Walk with entities stripped except the end node; what merge needs.
struct WalkKey {
  std::int32_t end;
  std::vector<RelationId> relations;

  friend auto operator<=>(const WalkKey&, const WalkKey&) = default;
};

std::vector<WalkKey> collect_walks(const KnowledgeGraph& graph, EntityId start, const MiningConfig& cfg, Rng& rng) {
  std::vector<WalkKey> walks;
  walks.push_back({index(start), {}});
  for (std::int64_t l = 1; l <= cfg.max_length; ++l) {
    for (std::int64_t j = 0; j < cfg.try_num; ++j) {
      if (auto w = random_walk(graph, start, l, rng)) walks.push_back({index(w->end()), std::move(w->relations)});
    }
  }
  std::sort(walks.begin(), walks.end());
  walks.erase(std::unique(walks.begin(), walks.end()), walks.end());
  return walks;
}

}  // namespace

std::vector<RelationPath> mine_paths(const KnowledgeGraph& graph, RelationId target, const MiningConfig& cfg,
                                     Rng& rng) {
  cfg.validate();
  if (!graph.has_reciprocals()) throw ConfigError("path mining requires a reciprocal-expanded graph");
  const auto facts = graph.triplets_of(target);
  if (facts.empty()) {
    log_warning("relation " + std::to_string(index(target)) + " has no triplets; nothing to mine");
    return {};
  }

  // Partial Fisher-Yates: sample without replacement.
  std::vector<std::size_t> order(facts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n_samples = std::min<std::size_t>(static_cast<std::size_t>(cfg.sample_num), facts.size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }

  std::unordered_set<RelationPath, RelationPathHash> mined;
  const RelationPath trivial{{target}};
  RelationPath path;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Triplet& fact = facts[order[s]];
    const auto head_walks = collect_walks(graph, fact.head, cfg, rng);
    const auto tail_walks = collect_walks(graph, fact.tail, cfg, rng);
    // Both lists are sorted by end node; merge equal-end groups.
    auto h = head_walks.begin();
    auto t = tail_walks.begin();
    while (h != head_walks.end() && t != tail_walks.end()) {
      if (h->end < t->end) {
        ++h;
      } else if (t->end < h->end) {
        ++t;
      } else {
        const auto end = h->end;
        auto h_last = h;
        while (h_last != head_walks.end() && h_last->end == end) ++h_last;
        auto t_last = t;
        while (t_last != tail_walks.end() && t_last->end == end) ++t_last;
        for (auto hw = h; hw != h_last; ++hw) {
          for (auto tw = t; tw != t_last; ++tw) {
            if (hw->relations.empty() && tw->relations.empty()) continue;
            path.relations.assign(hw->relations.begin(), hw->relations.end());
            for (auto it = tw->relations.rbegin(); it != tw->relations.rend(); ++it) {
              path.relations.push_back(graph.reciprocal(*it));
            }
            if (path != trivial) mined.insert(path);
          }
        }
        h = h_last;
        t = t_last;
      }
    }
  }
  std::vector<RelationPath> out(mined.begin(), mined.end());
  std::sort(out.begin(), out.end());
  return out;
}

ConfidenceCounts confidence_counts(const KnowledgeGraph& graph, RelationId target, const RelationPath& path) {
  ConfidenceCounts counts;
  ReachWorkspace ws(graph.num_entities());
  const auto facts = graph.triplets_of(target);
  for (std::size_t i = 0; i < facts.size();) {
    const EntityId head = facts[i].head;
    while (i < facts.size() && facts[i].head == head) ++i;
    const auto reached = ws.reach(graph, head, path);
    const auto known = graph.tails(head, target);
    counts.body += reached.size();
    std::size_t a = 0, b = 0;
    while (a < reached.size() && b < known.size()) {
      if (reached[a] < known[b]) {
        ++a;
      } else if (known[b] < reached[a]) {
        ++b;
      } else {
        ++counts.support;
        ++a;
        ++b;
      }
    }
  }
  return counts;
}

std::optional<double> confidence(const KnowledgeGraph& graph, RelationId target, const RelationPath& path) {
  const auto c = confidence_counts(graph, target, path);
  if (c.body == 0) return std::nullopt;
  return static_cast<double>(c.support) / static_cast<double>(c.body);
}

bool rule_rank_less(const Rule& a, const Rule& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
  return a.path < b.path;
}

std::size_t RuleSet::total() const {
  std::size_t n = 0;
  for (const auto& rules : by_relation) n += rules.size();
  return n;
}

namespace {

std::vector<Rule> mine_relation(const KnowledgeGraph& graph, RelationId target, const MiningConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(index(target))));
  std::vector<Rule> rules;
  for (auto& path : mine_paths(graph, target, cfg, rng)) {
    if (auto conf = confidence(graph, target, path)) rules.push_back({target, std::move(path), *conf});
  }
  std::sort(rules.begin(), rules.end(), rule_rank_less);
  if (rules.size() > static_cast<std::size_t>(cfg.top_rules)) rules.resize(static_cast<std::size_t>(cfg.top_rules));
  return rules;
}

}  // namespace

RuleSet mine_rules(const KnowledgeGraph& graph, const MiningConfig& cfg) {
  cfg.validate();
  RuleSet out(graph.num_relations());
  std::vector<RelationId> targets;
  for (std::int32_t r = 0; r < graph.num_relations(); ++r) {
    if (graph.count(relation(r)) > 0) targets.push_back(relation(r));
  }
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(targets.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < targets.size(); i = next++) {
      out.of(targets[i]) = mine_relation(graph, targets[i], cfg);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

void write_rules(const std::filesystem::path& path, const RuleSet& rules, const Vocabulary& relations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write rules file: " + path.string());
  for (const auto& per_relation : rules.by_relation) {
    for (const auto& rule : per_relation) {
      out << relations.name(index(rule.target)) << '\t' << format_g17(rule.confidence) << '\t';
      for (std::size_t i = 0; i < rule.path.size(); ++i) {
        const auto& name = relations.name(index(rule.path.relations[i]));
        if (name.find(',') != std::string::npos) throw ConfigError("relation name contains ',': " + name);
        if (i > 0) out << ',';
        out << name;
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("write failure: " + path.string());
}

RuleSet read_rules(const std::filesystem::path& path, const Vocabulary& relations) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open rules file: " + path.string());
  RuleSet rules(relations.size());
  auto lookup = [&](std::string_view name, std::size_t line_number) {
    auto id = relations.find(name);
    if (!id) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": unknown relation '" +
                        std::string(name) + "'");
    }
    return relation(*id);
  };
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto fields = split_fields(line);
    if (fields.size() != 3 || fields[2].empty()) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": malformed rule line");
    }
    Rule rule;
    rule.target = lookup(fields[0], line_number);
    try {
      std::size_t consumed = 0;
      rule.confidence = std::stod(std::string(fields[1]), &consumed);
      if (consumed != fields[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": bad confidence");
    }
    if (!(rule.confidence >= 0.0 && rule.confidence <= 1.0)) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": confidence outside [0,1]");
    }
    for (const auto name : split_fields(fields[2], ',')) rule.path.relations.push_back(lookup(name, line_number));
    rules.of(rule.target).push_back(std::move(rule));
  }
  return rules;
}

}  // namespace kgaug
