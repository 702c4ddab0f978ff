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

#include "kgaug/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "kgaug/errors.hpp"
#include "kgaug/log.hpp"
#include "kgaug/random.hpp"
#include "kgaug/text_io.hpp"

namespace kgaug {

namespace {

// Seed streams for each stochastic stage.
constexpr std::uint64_t kMineStream = 1;
constexpr std::uint64_t kRandomValidStream = 2;
constexpr std::uint64_t kRandomTestStream = 3;
constexpr std::uint64_t kBaseTrainStream = 10;
constexpr std::uint64_t kGridTrainStream = 100;
constexpr std::uint64_t kFinalTrainStream = 200;

}  // namespace

Protocol parse_protocol(std::string_view s) {
  if (s == "base") return Protocol::kBase;
  if (s == "random") return Protocol::kRandom;
  if (s == "transductive") return Protocol::kTransductive;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (base|random|transductive)");
}

ModelKind parse_model(std::string_view s) {
  if (s == "rescal") return ModelKind::kRescal;
  if (s == "tucker") return ModelKind::kTucker;
  throw ConfigError("unknown model '" + std::string(s) + "' (rescal|tucker)");
}

QuerySource parse_query_source(std::string_view s) {
  if (s == "valid") return QuerySource::kValid;
  if (s == "test") return QuerySource::kTest;
  if (s == "random") return QuerySource::kRandom;
  throw ConfigError("unknown query source '" + std::string(s) + "' (valid|test|random)");
}

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::kBase:
      return "base";
    case Protocol::kRandom:
      return "random";
    case Protocol::kTransductive:
      return "transductive";
  }
  return "?";
}

const char* to_string(ModelKind m) { return m == ModelKind::kRescal ? "rescal" : "tucker"; }

const char* to_string(QuerySource q) {
  switch (q) {
    case QuerySource::kValid:
      return "valid";
    case QuerySource::kTest:
      return "test";
    case QuerySource::kRandom:
      return "random";
  }
  return "?";
}

void PipelineConfig::validate() const {
  mining.validate();
  rescal.validate();
  tucker.validate();
  if (top_n_grid.empty() || conf_th_grid.empty()) throw ConfigError("filter grid values must be non-empty");
  for (const auto n : top_n_grid) FilterConfig{0.0, n}.validate();
  for (const auto c : conf_th_grid) FilterConfig{c, 1}.validate();
  for (const int k : hits_at) {
    if (k <= 0) throw ConfigError("hits_at values must be positive");
  }
  if (threads < 0) throw ConfigError("threads must be non-negative");
  // RESCAL relation matrices are d x d; relation_dim is their flattened size.
  if (model == ModelKind::kRescal && rescal.relation_dim != rescal.entity_dim * rescal.entity_dim) {
    throw ConfigError("train.rescal.relation_dim must equal entity_dim squared (" +
                      std::to_string(rescal.entity_dim * rescal.entity_dim) + ")");
  }
}

PipelineConfig default_config(std::string_view preset) {
  PipelineConfig cfg;
  cfg.preset = std::string(preset);
  TrainConfig common;
  common.batch_size = 128;
  common.entity_dim = 200;
  common.label_smoothing = 0.1;
  common.max_iterations = 500;
  if (preset == "wn18rr") {
    cfg.mining = {6000, 3, 10000, 1000, 0, 0};
    cfg.rescal = common;
    cfg.rescal.learning_rate = 0.001;
    cfg.rescal.decay_rate = 1.0;
    cfg.rescal.dropout = {0.2, 0.2, 0.3};
    cfg.rescal.relation_dim = 200 * 200;
    cfg.tucker = common;
    cfg.tucker.learning_rate = 0.003;
    cfg.tucker.decay_rate = 0.99;
    cfg.tucker.dropout = {0.2, 0.2, 0.3};
    cfg.tucker.relation_dim = 30;
  } else if (preset == "fb15k237") {
    cfg.mining = {100, 3, 300, 1000, 0, 0};
    cfg.rescal = common;
    cfg.rescal.learning_rate = 0.003;
    cfg.rescal.decay_rate = 0.995;
    cfg.rescal.dropout = {0.3, 0.4, 0.5};
    cfg.rescal.relation_dim = 200 * 200;
    cfg.tucker = common;
    cfg.tucker.learning_rate = 0.001;
    cfg.tucker.decay_rate = 1.0;
    cfg.tucker.dropout = {0.3, 0.4, 0.5};
    cfg.tucker.relation_dim = 200;
  } else {
    throw ConfigError("unknown preset '" + std::string(preset) + "' (wn18rr|fb15k237)");
  }
  return cfg;
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
  }
}

void read_train(const nlohmann::json& j, TrainConfig& t, const std::string& where) {
  reject_unknown(j,
                 {"learning_rate", "decay_rate", "dropout", "batch_size", "max_iterations", "eval_every", "patience",
                  "label_smoothing", "entity_dim", "relation_dim"},
                 where);
  read(j, "learning_rate", t.learning_rate, where);
  read(j, "decay_rate", t.decay_rate, where);
  if (j.contains("dropout")) {
    std::vector<double> d;
    read(j, "dropout", d, where);
    if (d.size() != 3) throw ConfigError(where + ".dropout needs [input, hidden1, hidden2]");
    t.dropout = {d[0], d[1], d[2]};
  }
  read(j, "batch_size", t.batch_size, where);
  read(j, "max_iterations", t.max_iterations, where);
  read(j, "eval_every", t.eval_every, where);
  read(j, "patience", t.patience, where);
  read(j, "label_smoothing", t.label_smoothing, where);
  read(j, "entity_dim", t.entity_dim, where);
  read(j, "relation_dim", t.relation_dim, where);
}

nlohmann::ordered_json train_to_json(const TrainConfig& t) {
  nlohmann::ordered_json j;
  j["learning_rate"] = t.learning_rate;
  j["decay_rate"] = t.decay_rate;
  j["dropout"] = {t.dropout.input, t.dropout.hidden1, t.dropout.hidden2};
  j["batch_size"] = t.batch_size;
  j["max_iterations"] = t.max_iterations;
  j["eval_every"] = t.eval_every;
  j["patience"] = t.patience;
  j["label_smoothing"] = t.label_smoothing;
  j["entity_dim"] = t.entity_dim;
  j["relation_dim"] = t.relation_dim;
  return j;
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"preset", "dataset", "seed", "output_dir", "protocol", "model", "threads", "mining", "filter_grid",
                  "train", "hits_at"},
                 "config");
  std::string preset = "wn18rr";
  read(j, "preset", preset, "config");
  PipelineConfig cfg = default_config(preset);
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (!j.contains("dataset")) throw ConfigError("config.dataset is required");
  const auto& ds = j.at("dataset");
  reject_unknown(ds, {"train", "valid", "test"}, "dataset");
  for (const char* key : {"train", "valid", "test"}) {
    if (!ds.contains(key)) throw ConfigError(std::string("config.dataset.") + key + " is required");
  }
  std::string path;
  read(ds, "train", path, "dataset");
  cfg.train_path = resolve(path);
  read(ds, "valid", path, "dataset");
  cfg.valid_path = resolve(path);
  read(ds, "test", path, "dataset");
  cfg.test_path = resolve(path);
  read(j, "seed", cfg.seed, "config");
  if (j.contains("output_dir")) {
    read(j, "output_dir", path, "config");
    cfg.output_dir = resolve(path);
  }
  std::string s;
  if (j.contains("protocol")) {
    read(j, "protocol", s, "config");
    cfg.protocol = parse_protocol(s);
  }
  if (j.contains("model")) {
    read(j, "model", s, "config");
    cfg.model = parse_model(s);
  }
  read(j, "threads", cfg.threads, "config");
  if (j.contains("mining")) {
    const auto& m = j.at("mining");
    reject_unknown(m, {"sample_num", "max_length", "try_num", "top_rules"}, "mining");
    read(m, "sample_num", cfg.mining.sample_num, "mining");
    read(m, "max_length", cfg.mining.max_length, "mining");
    read(m, "try_num", cfg.mining.try_num, "mining");
    read(m, "top_rules", cfg.mining.top_rules, "mining");
  }
  if (j.contains("filter_grid")) {
    const auto& g = j.at("filter_grid");
    reject_unknown(g, {"top_n", "conf_th"}, "filter_grid");
    read(g, "top_n", cfg.top_n_grid, "filter_grid");
    read(g, "conf_th", cfg.conf_th_grid, "filter_grid");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t, {"rescal", "tucker"}, "train");
    if (t.contains("rescal")) read_train(t.at("rescal"), cfg.rescal, "train.rescal");
    if (t.contains("tucker")) read_train(t.at("tucker"), cfg.tucker, "train.tucker");
  }
  read(j, "hits_at", cfg.hits_at, "config");
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["preset"] = cfg.preset;
  j["dataset"] = {{"train", cfg.train_path.string()}, {"valid", cfg.valid_path.string()}, {"test", cfg.test_path.string()}};
  j["seed"] = cfg.seed;
  j["protocol"] = to_string(cfg.protocol);
  j["model"] = to_string(cfg.model);
  j["mining"] = {{"sample_num", cfg.mining.sample_num},
                 {"max_length", cfg.mining.max_length},
                 {"try_num", cfg.mining.try_num},
                 {"top_rules", cfg.mining.top_rules}};
  j["filter_grid"] = {{"top_n", cfg.top_n_grid}, {"conf_th", cfg.conf_th_grid}};
  j["train"] = {{"rescal", train_to_json(cfg.rescal)}, {"tucker", train_to_json(cfg.tucker)}};
  j["hits_at"] = cfg.hits_at;
  return j;
}

Dataset load_experiment_dataset(const PipelineConfig& cfg) {
  Dataset data;
  data.splits = add_reciprocals(load_splits(cfg.train_path, cfg.valid_path, cfg.test_path));
  data.graph = training_graph(data.splits);
  data.known_train_valid.add(data.splits.train);
  data.known_train_valid.add(data.splits.valid);
  data.known_all = data.known_train_valid;
  data.known_all.add(data.splits.test);
  return data;
}

std::vector<Query> split_queries(const Dataset& data, QuerySource source) {
  switch (source) {
    case QuerySource::kValid:
      return queries_from_split(data.splits.valid);
    case QuerySource::kTest:
      return queries_from_split(data.splits.test);
    case QuerySource::kRandom:
      break;
  }
  throw ConfigError("random queries are drawn with random_queries, not from a split");
}

AugmentOutcome augment(const KnowledgeGraph& graph, const RuleSet& rules, std::span<const Query> queries,
                       const FilterConfig& filter, int threads) {
  AugmentOutcome out;
  out.queries = queries.size();
  const auto candidates = generate_candidates(graph, rules, queries, threads);
  out.candidates = candidates.size();
  out.augmented = filter_candidates(candidates, graph, queries, filter);
  std::set<Query> covered;
  for (const auto& w : out.augmented) covered.insert({w.triplet.head, w.triplet.relation});
  for (const auto& q : queries) out.queries_with_augmented += covered.contains(q) ? 1 : 0;
  return out;
}

TrainedModel train_model(const Dataset& data, ModelKind kind, const TrainConfig& cfg,
                         std::span<const WeightedTriplet> augmented, std::uint64_t seed) {
  TrainConfig run_cfg = cfg;
  run_cfg.seed = seed;
  const auto n = data.splits.entities.size();
  const auto r = data.splits.relations.size();
  TrainedModel out;
  out.model = kind == ModelKind::kRescal ? EmbeddingModel<double>::rescal(n, r, cfg.entity_dim)
                                         : EmbeddingModel<double>::tucker(n, r, cfg.entity_dim, cfg.relation_dim);
  Rng init_rng(derive_seed(seed, 1));
  xavier_normal_init(out.model, init_rng);
  const auto examples = build_kvsall_examples(data.splits.train, augmented);
  Validator<double> validator;
  if (!data.splits.valid.empty()) validator = mrr_validator<double>(data.splits.valid, data.known_train_valid);
  out.result = train(out.model, std::span<const KvsAllExample>(examples), run_cfg, validator);
  return out;
}

void write_train_log(const std::filesystem::path& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write training log: " + path.string());
  out << "epoch\tloss\tvalid_mrr\tbest_mrr\n";
  for (const auto& e : result.log) {
    out << e.epoch << '\t' << format_g17(e.mean_loss) << '\t' << (e.valid_mrr ? format_g17(*e.valid_mrr) : "-") << '\t'
        << format_g17(e.best_mrr) << '\n';
  }
}

namespace {

std::string grid_tag(const FilterConfig& f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "n%lld_c%g", static_cast<long long>(f.top_n), f.conf_th);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failure: " + path.string());
}

nlohmann::ordered_json coverage_json(const QueryCoverage& c) {
  return {{"all", c.all}, {"w_aug", c.with_augmented}, {"w_true", c.with_true}};
}

std::vector<Query> protocol_queries(const Dataset& data, const PipelineConfig& cfg, QuerySource split,
                                    std::uint64_t stream) {
  const auto masked = split_queries(data, split);
  if (cfg.protocol == Protocol::kRandom) {
    return random_queries(data.graph, masked.size(), derive_seed(cfg.seed, stream));
  }
  return masked;
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto& out_dir = cfg.output_dir;
  std::filesystem::create_directories(out_dir);
  PipelineSummary summary;
  nlohmann::ordered_json manifest;
  manifest["config"] = config_to_json(cfg);
  nlohmann::ordered_json seeds;
  seeds["base"] = cfg.seed;

  log_info("[pipeline] loading dataset");
  const Dataset data = load_experiment_dataset(cfg);
  save_dataset(data.splits, out_dir / "dataset");
  const auto& tcfg = cfg.train_config();

  log_info("[pipeline] training base model");
  const auto base_seed = derive_seed(cfg.seed, kBaseTrainStream);
  seeds["train_base"] = base_seed;
  auto base = train_model(data, cfg.model, tcfg, {}, base_seed);
  save_checkpoint(base.model, out_dir / "base.ckpt");
  write_train_log(out_dir / "train_log_base.tsv", base.result);
  summary.base_valid = evaluate(base.model, std::span<const Triplet>(data.splits.valid), data.known_all, cfg.hits_at);
  summary.base_test = evaluate(base.model, std::span<const Triplet>(data.splits.test), data.known_all, cfg.hits_at);

  nlohmann::ordered_json report;
  report["protocol"] = to_string(cfg.protocol);
  report["model"] = to_string(cfg.model);
  report["base"] = {{"valid", eval_report_json(summary.base_valid, false)},
                    {"test", eval_report_json(summary.base_test, false)}};
  std::string text = format_eval_table("Base / valid", summary.base_valid) + "\n" +
                     format_eval_table("Base / test", summary.base_test);

  if (cfg.protocol != Protocol::kBase) {
    log_info("[pipeline] mining rules");
    MiningConfig mcfg = cfg.mining;
    mcfg.seed = derive_seed(cfg.seed, kMineStream);
    mcfg.threads = cfg.threads;
    seeds["mining"] = mcfg.seed;
    const RuleSet rules = mine_rules(data.graph, mcfg);
    write_rules(out_dir / "rules.tsv", rules, data.splits.relations);
    manifest["rules"] = rules.total();

    const auto valid_queries = protocol_queries(data, cfg, QuerySource::kValid, kRandomValidStream);
    if (cfg.protocol == Protocol::kRandom) seeds["random_queries_valid"] = derive_seed(cfg.seed, kRandomValidStream);
    write_queries(out_dir / "queries_valid.tsv", valid_queries, data.splits.entities, data.splits.relations);
    const auto candidates = generate_candidates(data.graph, rules, valid_queries, cfg.threads);

    std::optional<TrainedModel> best_model;
    std::vector<WeightedTriplet> best_augmented;
    auto grid_json = nlohmann::ordered_json::array();
    std::uint64_t grid_index = 0;
    for (const auto top_n : cfg.top_n_grid) {
      for (const auto conf_th : cfg.conf_th_grid) {
        const FilterConfig filter{conf_th, top_n};
        log_info("[pipeline] grid " + grid_tag(filter));
        auto augmented = filter_candidates(candidates, data.graph, valid_queries, filter);
        write_augmented(out_dir / ("augmented_valid_" + grid_tag(filter) + ".tsv"), augmented, data.splits.entities,
                        data.splits.relations);
        GridRun run;
        run.filter = filter;
        run.augmented = augmented.size();
        // Coverage against validation gold; random queries rarely match it.
        run.coverage = query_coverage(data.splits.valid, augmented);
        const auto seed = derive_seed(cfg.seed, kGridTrainStream + grid_index);
        auto trained = train_model(data, cfg.model, tcfg, augmented, seed);
        write_train_log(out_dir / ("train_log_valid_" + grid_tag(filter) + ".tsv"), trained.result);
        run.best_valid_mrr = trained.result.best_mrr;
        run.best_epoch = trained.result.best_epoch;
        grid_json.push_back({{"top_n", top_n},
                             {"conf_th", conf_th},
                             {"seed", seed},
                             {"candidates", candidates.size()},
                             {"augmented", run.augmented},
                             {"coverage", coverage_json(run.coverage)},
                             {"best_valid_mrr", run.best_valid_mrr},
                             {"best_epoch", run.best_epoch}});
        if (!summary.selected || run.best_valid_mrr > best_model->result.best_mrr) {
          summary.selected = filter;
          best_model = std::move(trained);
          best_augmented = std::move(augmented);
        }
        summary.grid.push_back(run);
        ++grid_index;
      }
    }
    manifest["grid"] = grid_json;
    manifest["selected"] = {{"top_n", summary.selected->top_n}, {"conf_th", summary.selected->conf_th}};

    // Analysis on validation queries: base model vs the selected grid model.
    summary.final_valid =
        evaluate(best_model->model, std::span<const Triplet>(data.splits.valid), data.known_all, cfg.hits_at);
    auto analysis = breakdown(summary.base_valid, *summary.final_valid, best_augmented);
    add_similarity(analysis, best_model->model, *summary.final_valid, best_augmented, data.known_all);
    summary.analysis = analysis;

    log_info("[pipeline] final augmentation from test queries");
    const auto test_queries = protocol_queries(data, cfg, QuerySource::kTest, kRandomTestStream);
    if (cfg.protocol == Protocol::kRandom) seeds["random_queries_test"] = derive_seed(cfg.seed, kRandomTestStream);
    write_queries(out_dir / "queries_test.tsv", test_queries, data.splits.entities, data.splits.relations);
    const auto test_aug = augment(data.graph, rules, test_queries, *summary.selected, cfg.threads);
    write_augmented(out_dir / "augmented_test.tsv", test_aug.augmented, data.splits.entities, data.splits.relations);

    const auto final_seed = derive_seed(cfg.seed, kFinalTrainStream);
    seeds["train_final"] = final_seed;
    auto final_model = train_model(data, cfg.model, tcfg, test_aug.augmented, final_seed);
    save_checkpoint(final_model.model, out_dir / "final.ckpt");
    write_train_log(out_dir / "train_log_final.tsv", final_model.result);
    summary.final_test =
        evaluate(final_model.model, std::span<const Triplet>(data.splits.test), data.known_all, cfg.hits_at);

    // Test gold is read here only, after training.
    const auto test_cov = query_coverage(data.splits.test, test_aug.augmented);
    manifest["test_augmentation"] = {{"queries", test_aug.queries},
                                     {"candidates", test_aug.candidates},
                                     {"augmented", test_aug.augmented.size()},
                                     {"coverage", coverage_json(test_cov)}};

    report["selected"] = manifest["selected"];
    report["augmented"] = {{"valid", eval_report_json(*summary.final_valid, false)},
                           {"test", eval_report_json(*summary.final_test, false)}};
    report["analysis_valid"] = breakdown_report_json(analysis);
    text += "\n" + format_eval_table(std::string(to_string(cfg.protocol)) + " augmentation / valid (selected grid run)",
                                     *summary.final_valid);
    text += "\n" + format_eval_table(std::string(to_string(cfg.protocol)) + " augmentation / test", *summary.final_test);
    char sel[96];
    std::snprintf(sel, sizeof sel, "\nselected thresholds: topN=%lld confTh=%g\n\n",
                  static_cast<long long>(summary.selected->top_n), summary.selected->conf_th);
    text += sel + format_breakdown_table(analysis);
  }

  manifest["seeds"] = seeds;
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  write_text(out_dir / "report.txt", text);
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitFailure;
}

}  // namespace kgaug
