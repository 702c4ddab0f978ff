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

// kgaug command-line driver: mine, augment, train, evaluate, analyze, pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "kgaug/errors.hpp"
#include "kgaug/log.hpp"
#include "kgaug/pipeline.hpp"
#include "kgaug/random.hpp"

namespace {

using namespace kgaug;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string protocol;
  std::string model;
  std::string queries;
  bool verbose = false;
};

PipelineConfig resolve_config(const CommonOptions& o) {
  PipelineConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.protocol.empty()) cfg.protocol = parse_protocol(o.protocol);
  if (!o.model.empty()) cfg.model = parse_model(o.model);
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

EmbeddingModel<double> load_model_for(const std::filesystem::path& path, const Dataset& data) {
  auto model = load_checkpoint<double>(path);
  if (model.num_entities() != data.splits.entities.size() || model.num_relations() != data.splits.relations.size()) {
    throw ConfigError("checkpoint " + path.string() + " does not match the dataset vocabulary (" +
                      std::to_string(model.num_entities()) + " entities, " + std::to_string(model.num_relations()) +
                      " relations)");
  }
  return model;
}

std::span<const Triplet> split_of(const Dataset& data, QuerySource s) {
  if (s == QuerySource::kValid) return data.splits.valid;
  if (s == QuerySource::kTest) return data.splits.test;
  throw ConfigError("evaluation needs --queries valid or test");
}

int cmd_mine(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto data = load_experiment_dataset(cfg);
  MiningConfig mcfg = cfg.mining;
  mcfg.seed = derive_seed(cfg.seed, 1);
  mcfg.threads = cfg.threads;
  const auto rules = mine_rules(data.graph, mcfg);
  const auto path = cfg.output_dir / "rules.tsv";
  write_rules(path, rules, data.splits.relations);
  for (std::int32_t r = 0; r < data.splits.relations.size(); ++r) {
    std::cout << data.splits.relations.name(r) << '\t' << rules.of(relation(r)).size() << '\n';
  }
  std::cout << "rules written to " << path.string() << " (" << rules.total() << " rules)\n";
  return kExitOk;
}

int cmd_augment(const CommonOptions& o, const std::string& rules_path, std::optional<std::int64_t> top_n,
                std::optional<double> conf_th, const std::string& random_match) {
  const auto cfg = resolve_config(o);
  const auto data = load_experiment_dataset(cfg);
  const auto rules_file = rules_path.empty() ? cfg.output_dir / "rules.tsv" : std::filesystem::path(rules_path);
  const auto rules = read_rules(rules_file, data.splits.relations);
  if (rules.total() == 0) log_warning("rules file " + rules_file.string() + " holds no rules");

  QuerySource source = o.queries.empty() ? (cfg.protocol == Protocol::kRandom ? QuerySource::kRandom : QuerySource::kValid)
                                         : parse_query_source(o.queries);
  std::vector<Query> queries;
  if (source == QuerySource::kRandom) {
    const auto match = parse_query_source(random_match);
    const auto count = split_queries(data, match).size();
    queries = random_queries(data.graph, count, derive_seed(cfg.seed, match == QuerySource::kValid ? 2 : 3));
  } else {
    queries = split_queries(data, source);
  }
  const FilterConfig filter{conf_th.value_or(cfg.conf_th_grid.front()), top_n.value_or(cfg.top_n_grid.front())};
  const auto outcome = augment(data.graph, rules, queries, filter, cfg.threads);
  const auto tag = std::string(to_string(source));
  write_queries(cfg.output_dir / ("queries_" + tag + ".tsv"), queries, data.splits.entities, data.splits.relations);
  const auto out_path = cfg.output_dir / ("augmented_" + tag + ".tsv");
  write_augmented(out_path, outcome.augmented, data.splits.entities, data.splits.relations);
  std::cout << "queries\t" << outcome.queries << "\nqueries_with_augmented\t" << outcome.queries_with_augmented
            << "\ncandidates\t" << outcome.candidates << "\naugmented\t" << outcome.augmented.size() << '\n';
  std::cout << "augmented triples written to " << out_path.string() << '\n';
  return kExitOk;
}

int cmd_train(const CommonOptions& o, const std::string& augmented_path) {
  const auto cfg = resolve_config(o);
  const auto data = load_experiment_dataset(cfg);
  std::vector<WeightedTriplet> augmented;
  if (!augmented_path.empty()) {
    if (cfg.protocol == Protocol::kBase) throw ConfigError("the base protocol trains without augmented triples");
    augmented = read_augmented(augmented_path, data.splits.entities, data.splits.relations);
  }
  const auto trained = train_model(data, cfg.model, cfg.train_config(), augmented, derive_seed(cfg.seed, 300));
  const auto stem = std::string(to_string(cfg.model)) + "_" + to_string(cfg.protocol);
  save_checkpoint(trained.model, cfg.output_dir / (stem + ".ckpt"));
  write_train_log(cfg.output_dir / ("train_log_" + stem + ".tsv"), trained.result);
  for (const auto& e : trained.result.log) {
    if (e.valid_mrr) std::printf("epoch %lld\tloss %.6f\tvalid MRR %.4f\tbest %.4f\n", static_cast<long long>(e.epoch),
                                 e.mean_loss, *e.valid_mrr, e.best_mrr);
  }
  std::cout << "checkpoint written to " << (cfg.output_dir / (stem + ".ckpt")).string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint) {
  const auto cfg = resolve_config(o);
  const auto data = load_experiment_dataset(cfg);
  const auto model = load_model_for(checkpoint, data);
  const auto source = o.queries.empty() ? QuerySource::kTest : parse_query_source(o.queries);
  const auto report = evaluate(model, split_of(data, source), data.known_all, cfg.hits_at);
  const auto tag = std::string(to_string(source));
  std::cout << format_eval_table("evaluation / " + tag, report);
  write_file(cfg.output_dir / ("eval_" + tag + ".json"), eval_report_json(report, true).dump(2) + "\n");
  return kExitOk;
}

int cmd_analyze(const CommonOptions& o, const std::string& base_ckpt, const std::string& aug_ckpt,
                const std::string& augmented_path) {
  const auto cfg = resolve_config(o);
  const auto data = load_experiment_dataset(cfg);
  const auto base = load_model_for(base_ckpt, data);
  const auto aug = load_model_for(aug_ckpt, data);
  const auto augmented = read_augmented(augmented_path, data.splits.entities, data.splits.relations);
  const auto source = o.queries.empty() ? QuerySource::kValid : parse_query_source(o.queries);
  const auto gold = split_of(data, source);
  const auto base_report = evaluate(base, gold, data.known_all, cfg.hits_at);
  const auto aug_report = evaluate(aug, gold, data.known_all, cfg.hits_at);
  auto analysis = breakdown(base_report, aug_report, augmented);
  add_similarity(analysis, aug, aug_report, augmented, data.known_all);
  const auto coverage = query_coverage(gold, augmented);
  const auto tag = std::string(to_string(source));
  std::string text = format_eval_table("base / " + tag, base_report) + "\n" +
                     format_eval_table("augmented / " + tag, aug_report) + "\n" + format_breakdown_table(analysis);
  std::cout << text;
  nlohmann::ordered_json j;
  j["base"] = eval_report_json(base_report, false);
  j["augmented"] = eval_report_json(aug_report, false);
  j["coverage"] = {{"all", coverage.all}, {"w_aug", coverage.with_augmented}, {"w_true", coverage.with_true}};
  j["breakdown"] = breakdown_report_json(analysis);
  write_file(cfg.output_dir / ("analysis_" + tag + ".json"), j.dump(2) + "\n");
  write_file(cfg.output_dir / ("analysis_" + tag + ".txt"), text);
  return kExitOk;
}

int cmd_pipeline(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto summary = run_pipeline(cfg);
  std::ifstream report(cfg.output_dir / "report.txt");
  std::cout << report.rdbuf();
  return kExitOk;
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "JSON config file")->required();
  sub->add_option("--seed", o.seed, "Override the config seed");
  sub->add_option("--out", o.out, "Output directory (overrides config output_dir)");
  sub->add_option("--protocol", o.protocol, "base | random | transductive")
      ->check(CLI::IsMember({"base", "random", "transductive"}));
  sub->add_option("--model", o.model, "rescal | tucker")->check(CLI::IsMember({"rescal", "tucker"}));
  sub->add_option("--queries", o.queries, "valid | test | random")->check(CLI::IsMember({"valid", "test", "random"}));
  sub->add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-based transductive augmentation for knowledge graph embedding"};
  app.require_subcommand(1);
  CommonOptions opts;

  auto* mine = app.add_subcommand("mine", "Mine relation-path rules from the training graph");
  add_common(mine, opts);

  auto* augment_cmd = app.add_subcommand("augment", "Generate and filter confidence-weighted triples");
  add_common(augment_cmd, opts);
  std::string rules_path, random_match = "valid";
  std::optional<std::int64_t> top_n;
  std::optional<double> conf_th;
  augment_cmd->add_option("--rules", rules_path, "Rules file (default <out>/rules.tsv)");
  augment_cmd->add_option("--top-n", top_n, "topN (default: first grid value)");
  augment_cmd->add_option("--conf-th", conf_th, "confTh (default: first grid value)");
  augment_cmd->add_option("--random-match", random_match, "Split whose query count random queries match")
      ->check(CLI::IsMember({"valid", "test"}));

  auto* train_cmd = app.add_subcommand("train", "Train an embedding model");
  add_common(train_cmd, opts);
  std::string augmented_path;
  train_cmd->add_option("--augmented", augmented_path, "Augmented-triples file");

  auto* eval_cmd = app.add_subcommand("evaluate", "Filtered MRR / Hits@k of a checkpoint");
  add_common(eval_cmd, opts);
  std::string checkpoint;
  eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "Query breakdown and similarity MRR, base vs augmented");
  add_common(analyze_cmd, opts);
  std::string base_ckpt, aug_ckpt, analyze_aug;
  analyze_cmd->add_option("--base-checkpoint", base_ckpt, "Base model checkpoint")->required();
  analyze_cmd->add_option("--checkpoint", aug_ckpt, "Augmented model checkpoint")->required();
  analyze_cmd->add_option("--augmented", analyze_aug, "Augmented-triples file")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Full experiment for one protocol and model");
  add_common(pipeline, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (opts.verbose) log_level() = LogLevel::kInfo;
  try {
    if (mine->parsed()) return cmd_mine(opts);
    if (augment_cmd->parsed()) return cmd_augment(opts, rules_path, top_n, conf_th, random_match);
    if (train_cmd->parsed()) return cmd_train(opts, augmented_path);
    if (eval_cmd->parsed()) return cmd_evaluate(opts, checkpoint);
    if (analyze_cmd->parsed()) return cmd_analyze(opts, base_ckpt, aug_ckpt, analyze_aug);
    if (pipeline->parsed()) return cmd_pipeline(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitFailure;
}
