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

#include <array>
#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "kgaug/augmenter.hpp"
#include "kgaug/embedding.hpp"
#include "kgaug/errors.hpp"
#include "kgaug/knowledge_graph.hpp"

namespace kgaug {

/// Known correct tails per (head, relation) over any number of triplet lists;
/// the filter set of the filtered ranking protocol.
class KnownAnswers {
 public:
  KnownAnswers() = default;
  explicit KnownAnswers(std::initializer_list<std::span<const Triplet>> lists);

  void add(std::span<const Triplet> triplets);
  // Ascending tail ids.
  std::span<const std::int32_t> answers(EntityId head, RelationId r) const;

 private:
  struct PairHash {
    std::size_t operator()(std::uint64_t k) const noexcept { return std::hash<std::uint64_t>{}(k * 0x9E3779B97F4A7C15ULL); }
  };
  static std::uint64_t key(EntityId h, RelationId r) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(index(h))) << 32) |
           static_cast<std::uint32_t>(index(r));
  }
  std::unordered_map<std::uint64_t, std::vector<std::int32_t>, PairHash> answers_;
};

/// 1 + number of unfiltered non-gold entities scoring >= the gold score.
/// Ties count against the gold entity. `filtered` lists entities to skip
/// (the gold itself is never skipped).
template <typename Scores>
std::int64_t filtered_rank(const Scores& scores, EntityId gold, std::span<const std::int32_t> filtered) {
  const auto g = index(gold);
  const auto gold_score = scores[g];
  std::int64_t rank = 1;
  std::size_t f = 0;
  const auto n = static_cast<std::int32_t>(scores.size());
  for (std::int32_t e = 0; e < n; ++e) {
    while (f < filtered.size() && filtered[f] < e) ++f;
    if (e == g) continue;
    if (f < filtered.size() && filtered[f] == e) continue;
    if (scores[e] >= gold_score) ++rank;
  }
  return rank;
}

struct RankResult {
  Query query;
  EntityId gold{};
  std::int64_t rank = 0;
};

struct EvalReport {
  double mrr = 0.0;
  std::map<int, double> hits_at;
  std::vector<RankResult> per_query;
};

inline const std::vector<int>& default_hits_at() {
  static const std::vector<int> ks{1, 3, 10};
  return ks;
}

/// MRR and Hits@k over a rank list. Throws on an empty list.
EvalReport summarize_ranks(std::vector<RankResult> ranks, std::span<const int> ks = default_hits_at());

template <typename Scalar>
std::int64_t filtered_rank(const EmbeddingModel<Scalar>& model, const Query& query, EntityId gold,
                           const KnownAnswers& known) {
  const auto scores = model.score_all(query.anchor, query.relation);
  return filtered_rank(scores, gold, known.answers(query.anchor, query.relation));
}

/// Filtered ranks of every gold triplet (tail masked) against all entities.
template <typename Scalar>
EvalReport evaluate(const EmbeddingModel<Scalar>& model, std::span<const Triplet> gold, const KnownAnswers& known,
                    std::span<const int> ks = default_hits_at()) {
  if (gold.empty()) throw Error("evaluate: empty query set");
  constexpr std::size_t kBlock = 256;
  const auto de = model.entity_dim();
  std::vector<RankResult> ranks;
  ranks.reserve(gold.size());
  RowMatrix<Scalar> queries;
  for (std::size_t start = 0; start < gold.size(); start += kBlock) {
    const std::size_t stop = std::min(gold.size(), start + kBlock);
    queries.resize(static_cast<Eigen::Index>(stop - start), de);
    for (std::size_t i = start; i < stop; ++i) {
      queries.row(static_cast<Eigen::Index>(i - start)) = model.query_vector(gold[i].head, gold[i].relation);
    }
    const RowMatrix<Scalar> scores = queries * model.params().entity.transpose();
    for (std::size_t i = start; i < stop; ++i) {
      const auto& t = gold[i];
      const RowVector<Scalar> row = scores.row(static_cast<Eigen::Index>(i - start));
      ranks.push_back({{t.head, t.relation}, t.tail, filtered_rank(row, t.tail, known.answers(t.head, t.relation))});
    }
  }
  return summarize_ranks(std::move(ranks), ks);
}

/// Filtered validation MRR as a training validator.
template <typename Scalar>
Validator<Scalar> mrr_validator(std::vector<Triplet> gold, const KnownAnswers& known) {
  return [gold = std::move(gold), &known](const EmbeddingModel<Scalar>& model) {
    return evaluate(model, std::span<const Triplet>(gold), known).mrr;
  };
}

enum class Category : std::uint8_t { kImproved = 0, kDegraded = 1, kRemainHigh = 2, kRemainLow = 3 };
inline constexpr std::array<Category, 4> kCategories{Category::kImproved, Category::kDegraded, Category::kRemainHigh,
                                                     Category::kRemainLow};
const char* category_name(Category c);

/// Category from base and augmented ranks: "high" means rank <= top_k.
Category categorize(std::int64_t base_rank, std::int64_t aug_rank, std::int64_t top_k = 10);

struct CategoryCounts {
  std::size_t all = 0;
  std::size_t with_augmented = 0;
  std::size_t with_true = 0;
};

struct SimilarityResult {
  double mrr = 0.0;
  std::size_t count = 0;
};

struct BreakdownReport {
  std::array<CategoryCounts, 4> counts{};
  // Absent when a category holds no w/aug-but-not-w/true query.
  std::array<std::optional<SimilarityResult>, 4> similarity{};
  std::vector<Category> per_query;
  std::vector<std::uint8_t> with_augmented;
  std::vector<std::uint8_t> with_true;

  const CategoryCounts& of(Category c) const { return counts[static_cast<std::size_t>(c)]; }
};

/// Four-way split of the shared query list with w/aug and w/true sub-counts.
/// Both reports must rank the identical (query, gold) list.
BreakdownReport breakdown(const EvalReport& base, const EvalReport& augmented_model,
                          std::span<const WeightedTriplet> augmented, std::int64_t top_k = 10);

/// Best (minimum) pessimistic rank of any member of `candidates` when all
/// entities except `gold` are ranked by descending `similarity`. Entities in
/// `other_answers` are removed unless they are candidates.
template <typename Similarities>
std::int64_t similarity_rank(const Similarities& similarity, EntityId gold, std::span<const std::int32_t> candidates,
                             std::span<const std::int32_t> other_answers) {
  if (candidates.empty()) throw Error("similarity_rank: empty candidate set");
  const auto n = static_cast<std::int32_t>(similarity.size());
  std::vector<std::uint8_t> pool(static_cast<std::size_t>(n), 1);
  pool[static_cast<std::size_t>(index(gold))] = 0;
  for (const auto e : other_answers) pool[static_cast<std::size_t>(e)] = 0;
  for (const auto e : candidates) {
    if (e != index(gold)) pool[static_cast<std::size_t>(e)] = 1;
  }
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto m : candidates) {
    if (m == index(gold)) continue;
    std::int64_t rank = 1;
    for (std::int32_t e = 0; e < n; ++e) {
      if (e != m && pool[static_cast<std::size_t>(e)] && similarity[e] >= similarity[m]) ++rank;
    }
    best = std::min(best, rank);
  }
  if (best == std::numeric_limits<std::int64_t>::max()) throw Error("similarity_rank: only the gold entity was given");
  return best;
}

/// Cosine similarity of every entity embedding to entity `target`; zero-norm rows give 0.
template <typename Scalar>
std::vector<double> cosine_to(const EmbeddingModel<Scalar>& model, EntityId target) {
  const auto& emb = model.params().entity;
  const auto t = emb.row(index(target));
  const double tn = static_cast<double>(t.norm());
  std::vector<double> out(static_cast<std::size_t>(emb.rows()), 0.0);
  for (Eigen::Index e = 0; e < emb.rows(); ++e) {
    const double en = static_cast<double>(emb.row(e).norm());
    if (en > 0.0 && tn > 0.0) out[static_cast<std::size_t>(e)] = static_cast<double>(emb.row(e).dot(t)) / (en * tn);
  }
  return out;
}

/// MRR of similarity ranks over the given gold triplets that have augmented
/// matches but not the gold triplet itself. nullopt when none qualify.
template <typename Scalar>
std::optional<SimilarityResult> similarity_mrr(const EmbeddingModel<Scalar>& model, std::span<const Triplet> gold,
                                               std::span<const WeightedTriplet> augmented, const KnownAnswers& known) {
  std::map<Query, std::vector<std::int32_t>> tails;
  for (const auto& w : augmented) tails[{w.triplet.head, w.triplet.relation}].push_back(index(w.triplet.tail));
  for (auto& [q, v] : tails) std::sort(v.begin(), v.end());
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : gold) {
    auto it = tails.find({t.head, t.relation});
    if (it == tails.end()) continue;
    if (std::binary_search(it->second.begin(), it->second.end(), index(t.tail))) continue;
    const auto sim = cosine_to(model, t.tail);
    sum += 1.0 / static_cast<double>(similarity_rank(sim, t.tail, it->second, known.answers(t.head, t.relation)));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return SimilarityResult{sum / static_cast<double>(count), count};
}

/// Fills report.similarity using the augmented model's entity embeddings,
/// grouping the gold triplets of `ranks` by their breakdown category.
template <typename Scalar>
void add_similarity(BreakdownReport& report, const EmbeddingModel<Scalar>& model, const EvalReport& ranks,
                    std::span<const WeightedTriplet> augmented, const KnownAnswers& known) {
  for (const auto c : kCategories) {
    std::vector<Triplet> members;
    for (std::size_t i = 0; i < ranks.per_query.size(); ++i) {
      if (report.per_query[i] != c) continue;
      const auto& r = ranks.per_query[i];
      members.push_back({r.query.anchor, r.query.relation, r.gold});
    }
    report.similarity[static_cast<std::size_t>(c)] = similarity_mrr(model, std::span<const Triplet>(members), augmented, known);
  }
}

// Human-readable tables and a JSON record format (see README).
std::string format_eval_table(const std::string& title, const EvalReport& report);
std::string format_breakdown_table(const BreakdownReport& report);
nlohmann::ordered_json eval_report_json(const EvalReport& report, bool include_ranks);
nlohmann::ordered_json breakdown_report_json(const BreakdownReport& report);

}  // namespace kgaug
