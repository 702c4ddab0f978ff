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

#include "kgaug/evaluator.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

namespace kgaug {

KnownAnswers::KnownAnswers(std::initializer_list<std::span<const Triplet>> lists) {
  for (const auto& l : lists) add(l);
}

void KnownAnswers::add(std::span<const Triplet> triplets) {
  for (const auto& t : triplets) {
    auto& v = answers_[key(t.head, t.relation)];
    const auto pos = std::lower_bound(v.begin(), v.end(), index(t.tail));
    if (pos == v.end() || *pos != index(t.tail)) v.insert(pos, index(t.tail));
  }
}

std::span<const std::int32_t> KnownAnswers::answers(EntityId head, RelationId r) const {
  auto it = answers_.find(key(head, r));
  if (it == answers_.end()) return {};
  return it->second;
}

EvalReport summarize_ranks(std::vector<RankResult> ranks, std::span<const int> ks) {
  if (ranks.empty()) throw Error("evaluate: empty query set");
  EvalReport report;
  double rr = 0.0;
  for (const auto& r : ranks) rr += 1.0 / static_cast<double>(r.rank);
  report.mrr = rr / static_cast<double>(ranks.size());
  for (const int k : ks) {
    std::size_t hits = 0;
    for (const auto& r : ranks) hits += r.rank <= k ? 1 : 0;
    report.hits_at[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  report.per_query = std::move(ranks);
  return report;
}

const char* category_name(Category c) {
  switch (c) {
    case Category::kImproved:
      return "Improved";
    case Category::kDegraded:
      return "Degraded";
    case Category::kRemainHigh:
      return "RemainHigh";
    case Category::kRemainLow:
      return "RemainLow";
  }
  return "?";
}

Category categorize(std::int64_t base_rank, std::int64_t aug_rank, std::int64_t top_k) {
  const bool base_high = base_rank <= top_k;
  const bool aug_high = aug_rank <= top_k;
  if (base_high && aug_high) return Category::kRemainHigh;
  if (!base_high && aug_high) return Category::kImproved;
  if (base_high && !aug_high) return Category::kDegraded;
  return Category::kRemainLow;
}

BreakdownReport breakdown(const EvalReport& base, const EvalReport& augmented_model,
                          std::span<const WeightedTriplet> augmented, std::int64_t top_k) {
  if (base.per_query.size() != augmented_model.per_query.size()) {
    throw Error("breakdown: reports cover different numbers of queries");
  }
  std::unordered_set<Triplet, TripletHash> aug_set;
  std::set<Query> aug_queries;
  for (const auto& w : augmented) {
    aug_set.insert(w.triplet);
    aug_queries.insert({w.triplet.head, w.triplet.relation});
  }
  BreakdownReport report;
  const std::size_t n = base.per_query.size();
  report.per_query.reserve(n);
  report.with_augmented.reserve(n);
  report.with_true.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = base.per_query[i];
    const auto& a = augmented_model.per_query[i];
    if (b.query != a.query || b.gold != a.gold) {
      throw Error("breakdown: reports disagree at query " + std::to_string(i));
    }
    const Category c = categorize(b.rank, a.rank, top_k);
    const bool w_aug = aug_queries.contains(b.query);
    const bool w_true = aug_set.contains(Triplet{b.query.anchor, b.query.relation, b.gold});
    auto& cell = report.counts[static_cast<std::size_t>(c)];
    ++cell.all;
    cell.with_augmented += w_aug ? 1 : 0;
    cell.with_true += w_true ? 1 : 0;
    report.per_query.push_back(c);
    report.with_augmented.push_back(w_aug);
    report.with_true.push_back(w_true);
  }
  return report;
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_eval_table(const std::string& title, const EvalReport& report) {
  std::ostringstream out;
  out << title << '\n';
  out << pad("queries", 10) << pad("MRR", 10);
  for (const auto& [k, v] : report.hits_at) out << pad("Hits@" + std::to_string(k), 10);
  out << '\n' << pad(std::to_string(report.per_query.size()), 10) << pad(fixed(report.mrr), 10);
  for (const auto& [k, v] : report.hits_at) out << pad(fixed(v), 10);
  out << '\n';
  return out.str();
}

std::string format_breakdown_table(const BreakdownReport& report) {
  auto cell = [&](Category c) {
    const auto& k = report.of(c);
    return pad(std::to_string(k.all), 8) + pad(std::to_string(k.with_augmented), 8) + pad(std::to_string(k.with_true), 8);
  };
  std::ostringstream out;
  out << "Breakdown of queries by gold rank (rows: augmented model, columns: base model)\n";
  out << std::string(22, ' ') << pad("base gold in top-10", 24) << "  " << pad("base gold outside top-10", 24) << '\n';
  out << std::string(22, ' ') << pad("all", 8) << pad("w/aug", 8) << pad("w/true", 8) << "  " << pad("all", 8)
      << pad("w/aug", 8) << pad("w/true", 8) << '\n';
  out << "aug gold in top-10    " << cell(Category::kRemainHigh) << "  " << cell(Category::kImproved) << '\n';
  out << "aug gold outside      " << cell(Category::kDegraded) << "  " << cell(Category::kRemainLow) << '\n';
  out << '\n' << "Cosine similarity MRR (w/aug queries without the gold triplet)\n";
  out << pad("category", 12) << pad("sim MRR", 12) << pad("#triplets", 12) << '\n';
  for (const auto c : {Category::kImproved, Category::kDegraded, Category::kRemainLow, Category::kRemainHigh}) {
    const auto& s = report.similarity[static_cast<std::size_t>(c)];
    out << pad(category_name(c), 12) << pad(s ? fixed(s->mrr) : "-", 12) << pad(s ? std::to_string(s->count) : "0", 12)
        << '\n';
  }
  return out.str();
}

nlohmann::ordered_json eval_report_json(const EvalReport& report, bool include_ranks) {
  nlohmann::ordered_json j;
  j["queries"] = report.per_query.size();
  j["mrr"] = report.mrr;
  nlohmann::ordered_json hits = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.hits_at) hits[std::to_string(k)] = v;
  j["hits_at"] = hits;
  if (include_ranks) {
    auto ranks = nlohmann::ordered_json::array();
    for (const auto& r : report.per_query) {
      ranks.push_back({index(r.query.anchor), index(r.query.relation), index(r.gold), r.rank});
    }
    j["ranks"] = ranks;
  }
  return j;
}

nlohmann::ordered_json breakdown_report_json(const BreakdownReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto c : kCategories) {
    const auto& k = report.of(c);
    nlohmann::ordered_json cat;
    cat["all"] = k.all;
    cat["w_aug"] = k.with_augmented;
    cat["w_true"] = k.with_true;
    const auto& s = report.similarity[static_cast<std::size_t>(c)];
    if (s) {
      cat["similarity_mrr"] = s->mrr;
      cat["similarity_count"] = s->count;
    } else {
      cat["similarity_mrr"] = nullptr;
      cat["similarity_count"] = 0;
    }
    j[category_name(c)] = cat;
  }
  return j;
}

}  // namespace kgaug
