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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "kgaug/errors.hpp"
#include "oracles.hpp"
#include "planted.hpp"
#include "test_util.hpp"

namespace kgaug {
namespace {

RelationPath path_of(std::initializer_list<std::int32_t> ids) {
  RelationPath p;
  for (const auto r : ids) p.relations.push_back(relation(r));
  return p;
}

// Raw relations r1=0, r2=1, r=2; reciprocals at +3.
KnowledgeGraph small_graph(std::vector<Triplet> raw, std::int32_t num_entities, std::int32_t raw_relations) {
  std::vector<Triplet> all = raw;
  for (const auto& t : raw) all.push_back({t.tail, reciprocal_of(t.relation, raw_relations), t.head});
  return build_graph(all, num_entities, 2 * raw_relations, raw_relations);
}

constexpr EntityId a = entity(0), b = entity(1), c = entity(2), b2 = entity(3), d = entity(4);
constexpr RelationId r1 = relation(0), r2 = relation(1), rt = relation(2);

TEST(RandomWalk, ForcedChoice) {
  const auto g = build_graph(std::vector<Triplet>{{a, r1, b}}, 2, 1);
  Rng rng(1);
  const auto w = random_walk(g, a, 1, rng);
  ASSERT_TRUE(w.has_value());
  EXPECT_EQ(w->nodes, (std::vector<EntityId>{a, b}));
  EXPECT_EQ(w->relations, (std::vector<RelationId>{r1}));
}

TEST(RandomWalk, IsolatedNodeHasNoWalk) {
  const auto g = build_graph(std::vector<Triplet>{{a, r1, b}}, 3, 1);
  Rng rng(1);
  EXPECT_FALSE(random_walk(g, c, 1, rng).has_value());
  // Dead end before the requested length.
  EXPECT_FALSE(random_walk(g, a, 2, rng).has_value());
}

TEST(RandomWalk, UniformBranching) {
  const auto g = build_graph(std::vector<Triplet>{{a, r1, b}, {a, r2, c}}, 3, 2);
  Rng rng(42);
  int to_b = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto w = random_walk(g, a, 1, rng);
    ASSERT_TRUE(w.has_value());
    if (w->end() == b) ++to_b;
  }
  EXPECT_NEAR(to_b, 5000, 300);
  EXPECT_NEAR(10000 - to_b, 5000, 300);
}

TEST(MinePaths, FindsComposition) {
  const auto g = small_graph({{a, r1, b}, {b, r2, c}, {a, rt, c}}, 3, 3);
  MiningConfig cfg;
  cfg.sample_num = 10;
  cfg.max_length = 2;
  cfg.try_num = 200;
  Rng rng(7);
  const auto paths = mine_paths(g, rt, cfg, rng);
  EXPECT_NE(std::find(paths.begin(), paths.end(), path_of({0, 1})), paths.end());
  EXPECT_EQ(std::find(paths.begin(), paths.end(), path_of({2})), paths.end());
  for (const auto& p : paths) EXPECT_FALSE(p.relations.empty());
}

TEST(MinePaths, IsolatedTargetUsesOnlyTargetAndInverse) {
  // The target edge shares no node with the unrelated r1 edge.
  const auto g = small_graph({{a, rt, c}, {b, r1, d}}, 5, 3);
  MiningConfig cfg;
  cfg.sample_num = 10;
  cfg.max_length = 3;
  cfg.try_num = 100;
  Rng rng(3);
  const auto paths = mine_paths(g, rt, cfg, rng);
  EXPECT_FALSE(paths.empty());
  const auto inv = g.reciprocal(rt);
  for (const auto& p : paths) {
    EXPECT_NE(p, path_of({2}));
    for (const auto r : p.relations) EXPECT_TRUE(r == rt || r == inv);
  }
}

TEST(MinePaths, EveryPathConnectsASampledPair) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto kg = oracle::random_kg(gen, 12, 2, 25);
    const auto g = oracle::expanded_graph(kg);
    MiningConfig cfg;
    cfg.sample_num = 1000;
    cfg.max_length = 2;
    cfg.try_num = 20;
    for (std::int32_t r = 0; r < g.num_relations(); ++r) {
      Rng rng(trial * 31 + r);
      for (const auto& p : mine_paths(g, relation(r), cfg, rng)) {
        bool connects = false;
        for (const auto& t : g.triplets_of(relation(r))) {
          connects = connects || oracle::path_exists(kg.expanded, t.head, t.tail, p);
        }
        EXPECT_TRUE(connects);
      }
    }
  }
}

TEST(MiningConfig, RejectsZeroSampleNum) {
  MiningConfig cfg;
  cfg.sample_num = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  const auto g = small_graph({{a, rt, c}}, 3, 3);
  Rng rng(1);
  EXPECT_THROW(mine_paths(g, rt, cfg, rng), ConfigError);
}

TEST(MinePaths, EmptyTargetGivesEmptySet) {
  const auto g = small_graph({{a, r1, b}}, 3, 3);
  Rng rng(1);
  EXPECT_TRUE(mine_paths(g, rt, MiningConfig{}, rng).empty());
}

TEST(Confidence, FullSupport) {
  const auto g = small_graph({{a, r1, b}, {b, r2, c}, {a, rt, c}}, 5, 3);
  EXPECT_EQ(confidence(g, rt, path_of({0, 1})), 1.0);
}

TEST(Confidence, HalfSupport) {
  const auto g = small_graph({{a, r1, b}, {b, r2, c}, {a, rt, c}, {a, r1, b2}, {b2, r2, d}}, 5, 3);
  const auto counts = confidence_counts(g, rt, path_of({0, 1}));
  EXPECT_EQ(counts.support, 1u);
  EXPECT_EQ(counts.body, 2u);
  EXPECT_EQ(confidence(g, rt, path_of({0, 1})), 0.5);
}

TEST(Confidence, UndefinedWithoutTargetEdgeAtHead) {
  // The body holds for (a, c) but a has no target edge; the target edge sits elsewhere.
  const auto g = small_graph({{a, r1, b}, {b, r2, c}, {d, rt, b2}}, 5, 3);
  EXPECT_FALSE(confidence(g, rt, path_of({0, 1})).has_value());
}

TEST(Confidence, MultipleGroundPathsCountOnce) {
  const auto g = small_graph({{a, r1, b}, {b, r2, c}, {a, r1, b2}, {b2, r2, c}, {a, rt, c}}, 5, 3);
  const auto counts = confidence_counts(g, rt, path_of({0, 1}));
  EXPECT_EQ(counts.support, 1u);
  EXPECT_EQ(counts.body, 1u);
}

TEST(Confidence, MatchesPairEnumerationOracle) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const auto kg = oracle::random_kg(gen, 20, 2, 40);
    const auto g = oracle::expanded_graph(kg);
    for (const auto& p : oracle::all_paths(g.num_relations(), 3)) {
      for (std::int32_t r = 0; r < g.num_relations(); ++r) {
        const auto expected = oracle::pcwa_confidence(kg.expanded, kg.num_entities, relation(r), p);
        const auto got = confidence(g, relation(r), p);
        ASSERT_EQ(got.has_value(), expected.has_value());
        if (got) {
          EXPECT_EQ(*got, *expected);
          EXPECT_GE(*got, 0.0);
          EXPECT_LE(*got, 1.0);
        }
      }
    }
  }
}

KnowledgeGraph planted_training_graph(DatasetSplits* out = nullptr) {
  testing::TempDir dir("planted");
  testing::write_planted(testing::planted_graph(), dir.path());
  auto splits = add_reciprocals(load_splits(dir / "train.txt", dir / "valid.txt", dir / "test.txt"));
  auto g = training_graph(splits);
  if (out != nullptr) *out = std::move(splits);
  return g;
}

TEST(MineRules, PlantedRuleConfidence) {
  DatasetSplits splits;
  const auto g = planted_training_graph(&splits);
  MiningConfig cfg;
  cfg.sample_num = 100;
  cfg.max_length = 2;
  cfg.try_num = 50;
  cfg.seed = 9;
  const auto rules = mine_rules(g, cfg);
  const auto r3 = relation(*splits.relations.find("r3"));
  const RelationPath body{{relation(*splits.relations.find("r1")), relation(*splits.relations.find("r2"))}};
  const auto& list = rules.of(r3);
  const auto it = std::find_if(list.begin(), list.end(), [&](const Rule& r) { return r.path == body; });
  ASSERT_NE(it, list.end());
  EXPECT_NEAR(it->confidence, 0.9, 0.05);
  EXPECT_EQ(it->confidence, testing::planted_graph().training_ratio());
}

TEST(MineRules, DeterministicAndSortedAndTruncated) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto kg = oracle::random_kg(gen, 15, 2, 30);
    const auto g = oracle::expanded_graph(kg);
    MiningConfig cfg;
    cfg.sample_num = 20;
    cfg.max_length = 2;
    cfg.try_num = 30;
    cfg.top_rules = 4;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.threads = 1;
    const auto first = mine_rules(g, cfg);
    cfg.threads = 3;
    const auto second = mine_rules(g, cfg);
    ASSERT_EQ(first.by_relation.size(), second.by_relation.size());
    for (std::size_t r = 0; r < first.by_relation.size(); ++r) {
      const auto& x = first.by_relation[r];
      const auto& y = second.by_relation[r];
      ASSERT_EQ(x.size(), y.size());
      EXPECT_LE(x.size(), 4u);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(x[i].path, y[i].path);
        EXPECT_EQ(x[i].confidence, y[i].confidence);
        if (i > 0) EXPECT_FALSE(rule_rank_less(x[i], x[i - 1]));
        EXPECT_GE(x[i].confidence, 0.0);
        EXPECT_LE(x[i].confidence, 1.0);
      }
    }
  }
}

TEST(RuleRank, TieBreaks) {
  const Rule high{rt, path_of({0, 1, 1}), 0.9};
  const Rule short_tie{rt, path_of({1}), 0.5};
  const Rule long_tie{rt, path_of({0, 0}), 0.5};
  const Rule lex_tie{rt, path_of({0, 1}), 0.5};
  EXPECT_TRUE(rule_rank_less(high, short_tie));
  EXPECT_TRUE(rule_rank_less(short_tie, long_tie));
  EXPECT_TRUE(rule_rank_less(long_tie, lex_tie));
  EXPECT_FALSE(rule_rank_less(lex_tie, long_tie));
}

TEST(RulesFile, RoundTripAndUnknownRelation) {
  DatasetSplits splits;
  const auto g = planted_training_graph(&splits);
  MiningConfig cfg;
  cfg.sample_num = 20;
  cfg.max_length = 2;
  cfg.try_num = 20;
  const auto rules = mine_rules(g, cfg);
  ASSERT_GT(rules.total(), 0u);
  testing::TempDir dir("rules");
  write_rules(dir / "rules.tsv", rules, splits.relations);
  const auto back = read_rules(dir / "rules.tsv", splits.relations);
  ASSERT_EQ(back.by_relation.size(), rules.by_relation.size());
  for (std::size_t r = 0; r < rules.by_relation.size(); ++r) {
    ASSERT_EQ(back.by_relation[r].size(), rules.by_relation[r].size());
    for (std::size_t i = 0; i < rules.by_relation[r].size(); ++i) {
      EXPECT_EQ(back.by_relation[r][i].path, rules.by_relation[r][i].path);
      EXPECT_EQ(back.by_relation[r][i].confidence, rules.by_relation[r][i].confidence);
    }
  }
  testing::write_text(dir / "bad.tsv", "r3\t0.5\tr1,nope\n");
  EXPECT_THROW(read_rules(dir / "bad.tsv", splits.relations), ConfigError);
  testing::write_text(dir / "garbled.tsv", "r3\tabc\tr1\n");
  EXPECT_THROW(read_rules(dir / "garbled.tsv", splits.relations), ParseError);
}

}  // namespace
}  // namespace kgaug
