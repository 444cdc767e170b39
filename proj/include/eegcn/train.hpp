#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eegcn/corpus.hpp"
#include "eegcn/model.hpp"
#include "eegcn/syntax_graph.hpp"

namespace eegcn::train {

using corpus::kNumClasses;

// ---- metrics ---------------------------------------------------------------

using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [gold][pred]

struct MetricsReport {
  double accuracy = 0.0;
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
  double macro_f1 = 0.0;
  ConfusionMatrix confusion{};
  std::size_t count = 0;
  // Classes missing from both predictions and gold labels; they count as F1 = 0.
  std::vector<std::size_t> absent_classes;
  std::string variant;

  nlohmann::json to_json() const;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds, std::span<const std::size_t> golds);
MetricsReport evaluate_predictions(std::span<const std::size_t> preds, std::span<const std::size_t> golds);
double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> golds);
double macro_f1(std::span<const std::size_t> preds, std::span<const std::size_t> golds);

// ---- loss ------------------------------------------------------------------

// Mean cross-entropy over the batch plus l2 * sum of Frobenius norms of the
// regularized tensors.
ad::Tensor compute_loss(std::span<const ad::Tensor> logits, std::span<const std::size_t> labels,
                        std::span<const ad::Tensor> regularized, double l2);
ad::Tensor l2_penalty(std::span<const ad::Tensor> regularized);

// ---- training --------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  std::size_t patience = 0;  // 0 runs to max_epochs

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_macro_f1 = 0.0;
};

class NonFiniteLossError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  model::ModelParams best_params;
  std::size_t best_epoch = 0;  // 0: the initial parameters
  MetricsReport best_report;   // test metrics of best_params
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

std::vector<std::size_t> predict(std::span<const model::PreparedExample> data, const model::ModelParams& params,
                                 const model::ModelConfig& config);
MetricsReport evaluate(std::span<const model::PreparedExample> data, const model::ModelParams& params,
                       const model::ModelConfig& config);

// Shuffled mini-batch Adam over train; after each epoch evaluates on test and
// keeps the parameters with the best test accuracy (earliest on ties).
TrainResult train_epochs(model::ModelParams params, std::span<const model::PreparedExample> train,
                         std::span<const model::PreparedExample> test, const model::ModelConfig& model_config,
                         const TrainConfig& train_config, const EpochCallback& on_epoch = {});

void write_epoch_log_csv(std::ostream& out, std::span<const EpochLog> log);

// ---- experiments -----------------------------------------------------------

// Everything a run needs besides the configuration.
struct Dataset {
  std::vector<corpus::Example> train;
  std::vector<corpus::Example> test;
  corpus::Vocabulary vocab;
  std::vector<double> embeddings;  // vocab.size() x embed_dim
  graph::SdiTable sdi;             // training split only
};

struct RunOutcome {
  TrainResult result;
  model::ModelConfig model_config;
};

// Initializes parameters from model_config.seed and trains.
RunOutcome run_experiment(const Dataset& data, const model::ModelConfig& model_config,
                          const TrainConfig& train_config, const EpochCallback& on_epoch = {});

struct SweepRow {
  std::size_t layers = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

std::vector<SweepRow> layer_sweep(std::span<const std::size_t> layer_values, const Dataset& data,
                                  const model::ModelConfig& model_config, const TrainConfig& train_config);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

enum class Variant { full, no_dependency, no_edge_weight, no_bidirectional };

std::optional<Variant> parse_variant(std::string_view name);
std::string_view to_string(Variant v);
model::ModelConfig apply_variant(model::ModelConfig config, Variant v);
MetricsReport run_ablation(Variant variant, const Dataset& data, const model::ModelConfig& model_config,
                           const TrainConfig& train_config);

}  // namespace eegcn::train
