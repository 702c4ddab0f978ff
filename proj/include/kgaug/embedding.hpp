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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgaug/augmenter.hpp"
#include "kgaug/errors.hpp"
#include "kgaug/knowledge_graph.hpp"
#include "kgaug/random.hpp"

namespace kgaug {

enum class ModelKind : std::uint32_t { kRescal = 1, kTucker = 2 };

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Trainable tensors. Layouts:
///   entity    |E| x de
///   relation  RESCAL: |R| x de*de, row r is R_r in row-major order
///             TuckER: |R| x dr
///   core      TuckER: dr x de*de with W[i][j][k] = core(j, i*de + k); empty for RESCAL
template <typename Scalar>
struct Parameters {
  RowMatrix<Scalar> entity;
  RowMatrix<Scalar> relation;
  RowMatrix<Scalar> core;

  template <typename F>
  void for_each(F&& f) {
    f(entity);
    f(relation);
    f(core);
  }
  template <typename F>
  void for_each(F&& f) const {
    f(entity);
    f(relation);
    f(core);
  }

  Parameters zeros_like() const {
    return {RowMatrix<Scalar>::Zero(entity.rows(), entity.cols()),
            RowMatrix<Scalar>::Zero(relation.rows(), relation.cols()),
            RowMatrix<Scalar>::Zero(core.rows(), core.cols())};
  }

  void set_zero() {
    for_each([](auto& m) { m.setZero(); });
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const auto& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  friend bool operator==(const Parameters& a, const Parameters& b) {
    return a.entity == b.entity && a.relation == b.relation && a.core.rows() == b.core.rows() &&
           a.core.cols() == b.core.cols() && a.core == b.core;
  }
};

/// Bilinear KG embedding: RESCAL f = e_h^T R_r e_t, TuckER f = W x1 e_h x2 r x3 e_t.
template <typename Scalar>
class EmbeddingModel {
 public:
  using Matrix = RowMatrix<Scalar>;
  using Vector = RowVector<Scalar>;

  EmbeddingModel() = default;

  static EmbeddingModel rescal(std::int64_t num_entities, std::int64_t num_relations, std::int64_t dim) {
    EmbeddingModel m;
    m.kind_ = ModelKind::kRescal;
    m.entity_dim_ = dim;
    m.relation_dim_ = dim * dim;
    m.params_.entity = Matrix::Zero(num_entities, dim);
    m.params_.relation = Matrix::Zero(num_relations, dim * dim);
    m.params_.core = Matrix(0, 0);
    return m;
  }

  static EmbeddingModel tucker(std::int64_t num_entities, std::int64_t num_relations, std::int64_t entity_dim,
                               std::int64_t relation_dim) {
    EmbeddingModel m;
    m.kind_ = ModelKind::kTucker;
    m.entity_dim_ = entity_dim;
    m.relation_dim_ = relation_dim;
    m.params_.entity = Matrix::Zero(num_entities, entity_dim);
    m.params_.relation = Matrix::Zero(num_relations, relation_dim);
    m.params_.core = Matrix::Zero(relation_dim, entity_dim * entity_dim);
    return m;
  }

  ModelKind kind() const { return kind_; }
  std::int64_t num_entities() const { return params_.entity.rows(); }
  std::int64_t num_relations() const { return params_.relation.rows(); }
  std::int64_t entity_dim() const { return entity_dim_; }
  // RESCAL: de*de (flattened relation matrix); TuckER: dr.
  std::int64_t relation_dim() const { return relation_dim_; }

  Parameters<Scalar>& params() { return params_; }
  const Parameters<Scalar>& params() const { return params_; }

  auto entity_vector(EntityId e) const { return params_.entity.row(index(e)); }

  /// R_r for RESCAL.
  Eigen::Map<const Matrix> relation_matrix(RelationId r) const {
    return Eigen::Map<const Matrix>(params_.relation.row(index(r)).data(), entity_dim_, entity_dim_);
  }

  /// W x2 r: the de x de matrix TuckER applies between e_h and e_t.
  Matrix core_slice(RelationId r) const {
    Vector flat = params_.relation.row(index(r)) * params_.core;
    return Eigen::Map<const Matrix>(flat.data(), entity_dim_, entity_dim_);
  }

  /// Row vector q with f(h, r, t) = q . e_t.
  Vector query_vector(EntityId h, RelationId r) const {
    if (kind_ == ModelKind::kRescal) return params_.entity.row(index(h)) * relation_matrix(r);
    return params_.entity.row(index(h)) * core_slice(r);
  }

  /// Scores of (h, r, e) for every entity e.
  Vector score_all(EntityId h, RelationId r) const {
    return query_vector(h, r) * params_.entity.transpose();
  }

  Scalar score(EntityId h, RelationId r, EntityId t) const { return query_vector(h, r).dot(params_.entity.row(index(t))); }

 private:
  ModelKind kind_ = ModelKind::kRescal;
  std::int64_t entity_dim_ = 0;
  std::int64_t relation_dim_ = 0;
  Parameters<Scalar> params_;
};

template <typename Scalar>
Scalar score_rescal(const EmbeddingModel<Scalar>& model, EntityId h, RelationId r, EntityId t) {
  if (model.kind() != ModelKind::kRescal) throw Error("score_rescal called on a non-RESCAL model");
  return model.entity_vector(h) * model.relation_matrix(r) * model.entity_vector(t).transpose();
}

template <typename Scalar>
Scalar score_tucker(const EmbeddingModel<Scalar>& model, EntityId h, RelationId r, EntityId t) {
  if (model.kind() != ModelKind::kTucker) throw Error("score_tucker called on a non-TuckER model");
  return model.entity_vector(h) * model.core_slice(r) * model.entity_vector(t).transpose();
}

/// Xavier-normal entity and relation tables (std = sqrt(2 / (rows + cols))),
/// TuckER core uniform in [-1, 1].
template <typename Scalar>
void xavier_normal_init(EmbeddingModel<Scalar>& model, Rng& rng) {
  auto fill_normal = [&](RowMatrix<Scalar>& m) {
    if (m.size() == 0) return;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(m.rows() + m.cols())));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  };
  fill_normal(model.params().entity);
  fill_normal(model.params().relation);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  auto& core = model.params().core;
  for (Eigen::Index i = 0; i < core.size(); ++i) core.data()[i] = static_cast<Scalar>(uniform(rng));
}

/// Binary cross-entropy on a logit, stable for any finite logit.
template <typename Scalar>
Scalar bce_with_logit(Scalar logit, Scalar label) {
  using std::abs, std::exp, std::log1p, std::max;
  return max(logit, Scalar(0)) - label * logit + log1p(exp(-abs(logit)));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x)) : exp(x) / (Scalar(1) + exp(x));
}

/// Mean binary cross-entropy of |E| scores for one (head, relation) pair.
template <typename Scalar>
Scalar kvsall_loss(std::span<const Scalar> scores, std::span<const Scalar> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw Error("kvsall_loss: size mismatch");
  Scalar total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    using std::isfinite;
    if (!isfinite(scores[i])) throw NumericError("kvsall_loss: non-finite score");
    total += bce_with_logit(scores[i], labels[i]);
  }
  return total / static_cast<Scalar>(scores.size());
}

/// y <- (1 - s) y + s / |E|
template <typename Scalar>
Scalar smooth_label(Scalar label, Scalar smoothing, std::int64_t num_entities) {
  return (Scalar(1) - smoothing) * label + smoothing / static_cast<Scalar>(num_entities);
}

struct DropoutRates {
  double input = 0.0;
  double hidden1 = 0.0;
  double hidden2 = 0.0;
};

namespace detail {

// Inverted dropout mask: entries are 0 or 1 / (1 - p).
template <typename Scalar>
RowMatrix<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  RowMatrix<Scalar> mask(rows, cols);
  std::bernoulli_distribution keep(1.0 - p);
  const Scalar scale = static_cast<Scalar>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : Scalar(0);
  return mask;
}

}  // namespace detail

/// KvsAll forward/backward over a batch of (head, relation) pairs.
/// labels is B x |E| (already smoothed). Returns the mean over the batch of
/// kvsall_loss; when grad is non-null, adds the gradient of that mean to it.
///
/// Dropout sites (active only when rng is non-null):
///   RESCAL  input on e_h, hidden1 on e_h^T R_r
///   TuckER  input on e_h, hidden1 on W x2 r, hidden2 on e_h^T (W x2 r)
template <typename Scalar>
Scalar kvsall_batch(const EmbeddingModel<Scalar>& model, std::span<const Query> pairs,
                    const RowMatrix<Scalar>& labels, const DropoutRates& dropout, Rng* rng,
                    Parameters<Scalar>* grad) {
  using Matrix = RowMatrix<Scalar>;
  const auto& p = model.params();
  const Eigen::Index batch = static_cast<Eigen::Index>(pairs.size());
  const Eigen::Index n = model.num_entities();
  const Eigen::Index de = model.entity_dim();
  if (labels.rows() != batch || labels.cols() != n) throw Error("kvsall_batch: label shape mismatch");
  if (batch == 0) return Scalar(0);

  const bool use_dropout = rng != nullptr;
  auto maybe_mask = [&](Eigen::Index rows, Eigen::Index cols, double rate) -> std::optional<Matrix> {
    if (!use_dropout || rate <= 0.0) return std::nullopt;
    return detail::dropout_mask<Scalar>(rows, cols, rate, *rng);
  };

  Matrix x(batch, de);
  for (Eigen::Index b = 0; b < batch; ++b) x.row(b) = p.entity.row(index(pairs[static_cast<std::size_t>(b)].anchor));
  const auto mask_in = maybe_mask(batch, de, dropout.input);
  if (mask_in) x.array() *= mask_in->array();

  Matrix u(batch, de);
  Matrix slices;  // TuckER: B x de*de, dropped-out W x2 r per example
  std::optional<Matrix> mask_h1, mask_h2;
  Matrix rel_rows;
  if (model.kind() == ModelKind::kRescal) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      u.row(b) = x.row(b) * model.relation_matrix(pairs[static_cast<std::size_t>(b)].relation);
    }
    mask_h1 = maybe_mask(batch, de, dropout.hidden1);
    if (mask_h1) u.array() *= mask_h1->array();
  } else {
    const Eigen::Index dr = model.relation_dim();
    rel_rows.resize(batch, dr);
    for (Eigen::Index b = 0; b < batch; ++b) {
      rel_rows.row(b) = p.relation.row(index(pairs[static_cast<std::size_t>(b)].relation));
    }
    slices = rel_rows * p.core;
    mask_h1 = maybe_mask(batch, de * de, dropout.hidden1);
    if (mask_h1) slices.array() *= mask_h1->array();
    for (Eigen::Index b = 0; b < batch; ++b) {
      u.row(b) = x.row(b) * Eigen::Map<const Matrix>(slices.row(b).data(), de, de);
    }
    mask_h2 = maybe_mask(batch, de, dropout.hidden2);
    if (mask_h2) u.array() *= mask_h2->array();
  }

  const Matrix scores = u * p.entity.transpose();
  if (!scores.allFinite()) throw NumericError("non-finite score during training");
  const Scalar norm = static_cast<Scalar>(batch) * static_cast<Scalar>(n);
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) loss += bce_with_logit(scores.data()[i], labels.data()[i]);
  loss /= norm;
  if (grad == nullptr) return loss;

  // dL/dscore = (sigmoid(s) - y) / (B |E|)
  Matrix g(batch, n);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    g.data()[i] = (sigmoid(scores.data()[i]) - labels.data()[i]) / norm;
  }
  grad->entity.noalias() += g.transpose() * u;
  Matrix du = g * p.entity;

  Matrix dx(batch, de);
  if (model.kind() == ModelKind::kRescal) {
    if (mask_h1) du.array() *= mask_h1->array();
    for (Eigen::Index b = 0; b < batch; ++b) {
      const RelationId r = pairs[static_cast<std::size_t>(b)].relation;
      Eigen::Map<Matrix> d_rel(grad->relation.row(index(r)).data(), de, de);
      d_rel.noalias() += x.row(b).transpose() * du.row(b);
      dx.row(b) = du.row(b) * model.relation_matrix(r).transpose();
    }
  } else {
    if (mask_h2) du.array() *= mask_h2->array();
    Matrix d_slices(batch, de * de);
    for (Eigen::Index b = 0; b < batch; ++b) {
      Eigen::Map<Matrix>(d_slices.row(b).data(), de, de).noalias() = x.row(b).transpose() * du.row(b);
      dx.row(b) = du.row(b) * Eigen::Map<const Matrix>(slices.row(b).data(), de, de).transpose();
    }
    if (mask_h1) d_slices.array() *= mask_h1->array();
    grad->core.noalias() += rel_rows.transpose() * d_slices;
    const Matrix d_rel = d_slices * p.core.transpose();
    for (Eigen::Index b = 0; b < batch; ++b) {
      grad->relation.row(index(pairs[static_cast<std::size_t>(b)].relation)) += d_rel.row(b);
    }
  }
  if (mask_in) dx.array() *= mask_in->array();
  for (Eigen::Index b = 0; b < batch; ++b) {
    grad->entity.row(index(pairs[static_cast<std::size_t>(b)].anchor)) += dx.row(b);
  }
  return loss;
}

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8 by default) over a whole Parameters set.
template <typename Scalar>
class Adam {
 public:
  Adam(const Parameters<Scalar>& like, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(like.zeros_like()), v_(like.zeros_like()), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Parameters<Scalar>& params, const Parameters<Scalar>& grad, double learning_rate) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Scalar step_size = static_cast<Scalar>(learning_rate / bc1);
    const Scalar inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_), eps = static_cast<Scalar>(eps_);
    auto update = [&](RowMatrix<Scalar>& p, const RowMatrix<Scalar>& g, RowMatrix<Scalar>& m, RowMatrix<Scalar>& v) {
      m.array() = b1 * m.array() + (Scalar(1) - b1) * g.array();
      v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
      p.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_bc2 + eps);
    };
    update(params.entity, grad.entity, m_.entity, v_.entity);
    update(params.relation, grad.relation, m_.relation, v_.relation);
    update(params.core, grad.core, m_.core, v_.core);
  }

  std::int64_t steps() const { return t_; }

 private:
  Parameters<Scalar> m_;
  Parameters<Scalar> v_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

struct TrainConfig {
  double learning_rate = 0.003;
  double decay_rate = 0.99;
  DropoutRates dropout{0.2, 0.2, 0.3};
  std::int64_t batch_size = 128;
  std::int64_t max_iterations = 500;
  std::int64_t eval_every = 5;
  std::int64_t patience = 10;
  double label_smoothing = 0.1;
  std::int64_t entity_dim = 200;
  std::int64_t relation_dim = 30;
  std::uint64_t seed = 0;

  void validate() const {
    auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(decay_rate > 0.0)) throw ConfigError("decay_rate must be positive");
    if (!rate_ok(dropout.input) || !rate_ok(dropout.hidden1) || !rate_ok(dropout.hidden2)) {
      throw ConfigError("dropout rates must lie in [0,1)");
    }
    if (batch_size <= 0 || max_iterations <= 0 || eval_every <= 0 || patience <= 0) {
      throw ConfigError("batch_size, max_iterations, eval_every and patience must be positive");
    }
    if (!rate_ok(label_smoothing)) throw ConfigError("label_smoothing must lie in [0,1)");
    if (entity_dim <= 0 || relation_dim <= 0) throw ConfigError("embedding dimensions must be positive");
  }
};

/// One KvsAll instance: a (head, relation) pair and its non-zero raw labels.
struct KvsAllExample {
  Query pair;
  std::vector<std::pair<std::int32_t, double>> targets;
};

/// Groups training triplets (label 1) and augmented triplets (label = weight)
/// by (head, relation). Pairs present only via augmented triplets are kept.
inline std::vector<KvsAllExample> build_kvsall_examples(std::span<const Triplet> training,
                                                        std::span<const WeightedTriplet> augmented) {
  std::map<Query, std::map<std::int32_t, double>> grouped;
  for (const auto& w : augmented) {
    grouped[{w.triplet.head, w.triplet.relation}][index(w.triplet.tail)] = w.weight;
  }
  for (const auto& t : training) grouped[{t.head, t.relation}][index(t.tail)] = 1.0;
  std::vector<KvsAllExample> out;
  out.reserve(grouped.size());
  for (auto& [pair, targets] : grouped) out.push_back({pair, {targets.begin(), targets.end()}});
  return out;
}

struct TrainLogEntry {
  std::int64_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> valid_mrr;
  double best_mrr = 0.0;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  double best_mrr = 0.0;
  std::int64_t best_epoch = 0;
  std::int64_t epochs_run = 0;
};

template <typename Scalar>
using Validator = std::function<double(const EmbeddingModel<Scalar>&)>;

/// Mini-batch KvsAll training with Adam and per-epoch learning-rate decay.
/// The model must already be initialized. Every eval_every epochs the
/// validator's score (filtered validation MRR) is taken and the best
/// parameters kept; training stops after `patience` evaluations without
/// improvement. Without a validator the final parameters are kept.
template <typename Scalar>
TrainResult train(EmbeddingModel<Scalar>& model, std::span<const KvsAllExample> examples, const TrainConfig& cfg,
                  const Validator<Scalar>& validator = {}) {
  cfg.validate();
  if (examples.empty()) throw ConfigError("no training examples");
  const std::int64_t n = model.num_entities();
  Rng rng(derive_seed(cfg.seed, 0x7472));
  Adam<Scalar> adam(model.params());
  Parameters<Scalar> grad = model.params().zeros_like();
  std::optional<Parameters<Scalar>> best;
  TrainResult result;
  double lr = cfg.learning_rate;
  std::int64_t bad_evals = 0;

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Query> pairs;
  RowMatrix<Scalar> labels;
  const Scalar smoothing = static_cast<Scalar>(cfg.label_smoothing);
  const Scalar base_label = smooth_label(Scalar(0), smoothing, n);

  for (std::int64_t epoch = 1; epoch <= cfg.max_iterations; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      pairs.clear();
      labels.setConstant(static_cast<Eigen::Index>(stop - start), n, base_label);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = examples[order[i]];
        pairs.push_back(ex.pair);
        for (const auto& [tail, y] : ex.targets) {
          labels(static_cast<Eigen::Index>(i - start), tail) = smooth_label(static_cast<Scalar>(y), smoothing, n);
        }
      }
      grad.set_zero();
      const Scalar loss = kvsall_batch(model, std::span<const Query>(pairs), labels, cfg.dropout, &rng, &grad);
      using std::isfinite;
      if (!isfinite(loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      }
      adam.step(model.params(), grad, lr);
      loss_sum += static_cast<double>(loss);
      ++batches;
    }
    lr *= cfg.decay_rate;
    if (!model.params().all_finite()) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite parameters)");
    }
    result.epochs_run = epoch;
    TrainLogEntry entry{epoch, loss_sum / static_cast<double>(batches), std::nullopt, result.best_mrr};
    if (validator && (epoch % cfg.eval_every == 0 || epoch == cfg.max_iterations)) {
      const double mrr = validator(model);
      entry.valid_mrr = mrr;
      if (!best || mrr > result.best_mrr) {
        result.best_mrr = mrr;
        result.best_epoch = epoch;
        best = model.params();
        bad_evals = 0;
      } else {
        ++bad_evals;
      }
      entry.best_mrr = result.best_mrr;
      result.log.push_back(entry);
      if (bad_evals >= cfg.patience) break;
    } else {
      result.log.push_back(entry);
    }
  }
  if (best) {
    model.params() = std::move(*best);
  } else {
    result.best_epoch = result.epochs_run;
  }
  return result;
}

// Checkpoint layout (little-endian host order):
//   8-byte magic "KGAUGCK1", u32 kind, u32 reserved,
//   i64 num_entities, i64 num_relations, i64 entity_dim, i64 relation_dim,
//   then entity, relation, core tensors as row-major float64.
inline constexpr char kCheckpointMagic[8] = {'K', 'G', 'A', 'U', 'G', 'C', 'K', '1'};

template <typename Scalar>
void save_checkpoint(const EmbeddingModel<Scalar>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(model.kind()), 0};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  const std::int64_t dims[4] = {model.num_entities(), model.num_relations(), model.entity_dim(), model.relation_dim()};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  model.params().for_each([&](const RowMatrix<Scalar>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = static_cast<double>(m.data()[i]);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  });
  if (!out) throw IoError("write failure: " + path.string());
}

template <typename Scalar>
EmbeddingModel<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  std::uint32_t header[2];
  std::int64_t dims[4];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw ParseError("not a kgaug checkpoint: " + path.string());
  }
  for (auto d : dims) {
    if (d < 0) throw ParseError("corrupt checkpoint dimensions: " + path.string());
  }
  EmbeddingModel<Scalar> model;
  switch (static_cast<ModelKind>(header[0])) {
    case ModelKind::kRescal:
      model = EmbeddingModel<Scalar>::rescal(dims[0], dims[1], dims[2]);
      break;
    case ModelKind::kTucker:
      model = EmbeddingModel<Scalar>::tucker(dims[0], dims[1], dims[2], dims[3]);
      break;
    default:
      throw ParseError("unknown model kind in checkpoint: " + path.string());
  }
  model.params().for_each([&](RowMatrix<Scalar>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      m.data()[i] = static_cast<Scalar>(v);
    }
  });
  if (!in) throw ParseError("truncated checkpoint: " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes in checkpoint: " + path.string());
  return model;
}

}  // namespace kgaug
