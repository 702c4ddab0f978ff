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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgaug/augmenter.hpp"
#include "kgaug/embedding.hpp"
#include "kgaug/evaluator.hpp"
#include "kgaug/knowledge_graph.hpp"
#include "kgaug/rule_miner.hpp"

namespace kgaug {

enum class Protocol { kBase, kRandom, kTransductive };
enum class QuerySource { kValid, kTest, kRandom };

Protocol parse_protocol(std::string_view s);
ModelKind parse_model(std::string_view s);
QuerySource parse_query_source(std::string_view s);
const char* to_string(Protocol p);
const char* to_string(ModelKind m);
const char* to_string(QuerySource q);

struct PipelineConfig {
  std::filesystem::path train_path;
  std::filesystem::path valid_path;
  std::filesystem::path test_path;
  std::string preset = "wn18rr";
  MiningConfig mining;
  std::vector<std::int64_t> top_n_grid{5, 50};
  std::vector<double> conf_th_grid{0.0, 0.6};
  TrainConfig rescal;
  TrainConfig tucker;
  Protocol protocol = Protocol::kTransductive;
  ModelKind model = ModelKind::kTucker;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "kgaug_out";
  std::vector<int> hits_at{1, 3, 10};
  int threads = 0;

  const TrainConfig& train_config() const { return model == ModelKind::kRescal ? rescal : tucker; }
  TrainConfig& train_config() { return model == ModelKind::kRescal ? rescal : tucker; }
  void validate() const;
};

/// Hyperparameter defaults. "wn18rr" and "fb15k237" carry the published
/// per-dataset training and mining settings.
PipelineConfig default_config(std::string_view preset = "wn18rr");

/// Reads a JSON config (schema in README). Relative dataset and output paths
/// resolve against the config file's directory. Unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

/// Reciprocal-expanded splits with the training graph and filter sets.
struct Dataset {
  DatasetSplits splits;
  KnowledgeGraph graph;
  KnownAnswers known_train_valid;  // filter used while training (no test gold)
  KnownAnswers known_all;          // train + valid + test, final evaluation
};

Dataset load_experiment_dataset(const PipelineConfig& cfg);

/// Masked queries from the validation or test split; test triplets reach the
/// augmentation stage only through here.
std::vector<Query> split_queries(const Dataset& data, QuerySource source);

struct AugmentOutcome {
  std::size_t queries = 0;
  std::size_t candidates = 0;
  std::size_t queries_with_augmented = 0;
  std::vector<WeightedTriplet> augmented;
};

AugmentOutcome augment(const KnowledgeGraph& graph, const RuleSet& rules, std::span<const Query> queries,
                       const FilterConfig& filter, int threads = 0);

struct TrainedModel {
  EmbeddingModel<double> model;
  TrainResult result;
};

/// Fresh Xavier-initialized model trained on train + augmented triplets,
/// early-stopped on filtered validation MRR.
TrainedModel train_model(const Dataset& data, ModelKind kind, const TrainConfig& cfg,
                         std::span<const WeightedTriplet> augmented, std::uint64_t seed);

void write_train_log(const std::filesystem::path& path, const TrainResult& result);

struct GridRun {
  FilterConfig filter;
  QueryCoverage coverage;
  std::size_t augmented = 0;
  double best_valid_mrr = 0.0;
  std::int64_t best_epoch = 0;
};

struct PipelineSummary {
  std::vector<GridRun> grid;
  std::optional<FilterConfig> selected;
  EvalReport base_valid;
  EvalReport base_test;
  std::optional<EvalReport> final_valid;
  std::optional<EvalReport> final_test;
  std::optional<BreakdownReport> analysis;
};

/// mine -> augment(valid) -> grid-search train -> select (topN, confTh) ->
/// augment(test) -> final train -> evaluate -> analyze. The base protocol
/// trains and evaluates without augmentation. Writes all artifacts to
/// cfg.output_dir.
PipelineSummary run_pipeline(const PipelineConfig& cfg);

/// Exit status for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace kgaug
