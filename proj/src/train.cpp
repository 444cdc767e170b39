#include "eegcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eegcn/optim.hpp"
#include "eegcn/util.hpp"

namespace eegcn::train {

using ad::Tensor;

// ---- metrics ---------------------------------------------------------------

namespace {

void check_pairs(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  if (preds.empty()) throw std::invalid_argument("metrics need at least one prediction");
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("metrics: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(golds.size()) + " gold labels");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= kNumClasses || golds[i] >= kNumClasses) {
      throw std::invalid_argument("metrics: class index out of range at position " + std::to_string(i));
    }
  }
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  check_pairs(preds, golds);
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < preds.size(); ++i) ++m[golds[i]][preds[i]];
  return m;
}

MetricsReport evaluate_predictions(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  MetricsReport r;
  r.confusion = confusion_matrix(preds, golds);
  r.count = preds.size();
  std::size_t correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t tp = r.confusion[c][c];
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += r.confusion[k][c];
      actual += r.confusion[c][k];
    }
    correct += tp;
    r.precision[c] = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    r.recall[c] = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    const double denom = r.precision[c] + r.recall[c];
    r.f1[c] = denom > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / denom : 0.0;
    if (predicted == 0 && actual == 0) r.absent_classes.push_back(c);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
  r.macro_f1 = (r.f1[0] + r.f1[1] + r.f1[2]) / static_cast<double>(kNumClasses);
  return r;
}

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  return evaluate_predictions(preds, golds).accuracy;
}

double macro_f1(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  return evaluate_predictions(preds, golds).macro_f1;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::object();
  nlohmann::json absent = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::string name(corpus::to_string(static_cast<corpus::Sentiment>(c)));
    per_class[name] = {{"precision", precision[c]}, {"recall", recall[c]}, {"f1", f1[c]}};
  }
  for (auto c : absent_classes) absent.push_back(std::string(corpus::to_string(static_cast<corpus::Sentiment>(c))));
  nlohmann::json j = {{"accuracy", accuracy},
                      {"macro_f1", macro_f1},
                      {"per_class", per_class},
                      {"confusion", confusion},
                      {"count", count},
                      {"absent_classes", absent},
                      {"class_order", {"negative", "neutral", "positive"}}};
  if (!variant.empty()) j["variant"] = variant;
  return j;
}

// ---- loss ------------------------------------------------------------------

Tensor l2_penalty(std::span<const Tensor> regularized) {
  Tensor total = Tensor::scalar(0.0);
  for (const auto& w : regularized) total = ad::add(total, ad::l2_norm(w));
  return total;
}

Tensor compute_loss(std::span<const Tensor> logits, std::span<const std::size_t> labels,
                    std::span<const Tensor> regularized, double l2) {
  if (logits.empty() || logits.size() != labels.size()) {
    throw std::invalid_argument("compute_loss: " + std::to_string(logits.size()) + " logit rows for " +
                                std::to_string(labels.size()) + " labels");
  }
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] >= kNumClasses) throw std::out_of_range("label " + std::to_string(labels[i]) + " out of range");
    total = ad::add(total, ad::cross_entropy(logits[i], labels[i]));
  }
  Tensor loss = ad::scale(total, 1.0 / static_cast<double>(logits.size()));
  if (l2 != 0.0) loss = ad::add(loss, ad::scale(l2_penalty(regularized), l2));
  return loss;
}

// ---- training --------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(l2 >= 0.0)) throw std::invalid_argument("l2 must be non-negative");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
          {"l2", c.l2},                       {"seed", c.seed},             {"patience", c.patience}};
}

std::vector<std::size_t> predict(std::span<const model::PreparedExample> data, const model::ModelParams& params,
                                 const model::ModelConfig& config) {
  ad::NoGradGuard no_grad;
  std::vector<std::size_t> preds;
  preds.reserve(data.size());
  for (const auto& ex : data) {
    const Tensor logits = model::forward_logits(ex, params, config);
    auto v = logits.data();
    preds.push_back(static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin()));
  }
  return preds;
}

MetricsReport evaluate(std::span<const model::PreparedExample> data, const model::ModelParams& params,
                       const model::ModelConfig& config) {
  const auto preds = predict(data, params, config);
  std::vector<std::size_t> golds;
  golds.reserve(data.size());
  for (const auto& ex : data) golds.push_back(ex.label);
  return evaluate_predictions(preds, golds);
}

namespace {

std::string parameter_norms(model::ModelParams& params) {
  std::ostringstream os;
  for (auto& n : params.named()) {
    double ss = 0.0;
    for (double v : n.tensor->data()) ss += v * v;
    os << "\n  " << n.name << ": " << std::sqrt(ss);
  }
  return os.str();
}

}  // namespace

TrainResult train_epochs(model::ModelParams params, std::span<const model::PreparedExample> train,
                         std::span<const model::PreparedExample> test, const model::ModelConfig& model_config,
                         const TrainConfig& train_config, const EpochCallback& on_epoch) {
  train_config.validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");

  TrainResult result;
  if (train_config.max_epochs == 0) {
    result.best_params = params.clone();
    if (!test.empty()) result.best_report = evaluate(test, params, model_config);
    return result;
  }

  Rng shuffle_rng(derive_seed(train_config.seed, 1));
  Rng dropout_rng(derive_seed(train_config.seed, 2));
  ad::AdamState adam{{train_config.learning_rate, 0.9, 0.999, 1e-8}, 0, {}, {}};
  auto tensors = params.tensors();
  const auto regularized = params.regularized_tensors();

  std::vector<std::size_t> order(train.size());
  double best_acc = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 1; start < order.size(); start += train_config.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + train_config.batch_size);
      ad::GradientTape tape;
      std::vector<Tensor> logits;
      std::vector<std::size_t> labels;
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train[order[k]];
        logits.push_back(model::forward_logits(ex, params, model_config, &dropout_rng));
        labels.push_back(ex.label);
        auto v = logits.back().data();
        if (static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin()) == ex.label) ++correct;
      }
      const Tensor loss = compute_loss(logits, labels, regularized, train_config.l2);
      if (!std::isfinite(loss.item())) {
        throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch) + "; parameter norms:" + parameter_norms(params));
      }
      tape.backward(loss);
      ad::adam_step(tensors, adam);
      loss_sum += loss.item() * static_cast<double>(end - start);
    }

    const MetricsReport report = test.empty() ? MetricsReport{} : evaluate(test, params, model_config);
    EpochLog row{epoch, loss_sum / static_cast<double>(train.size()),
                 static_cast<double>(correct) / static_cast<double>(train.size()), report.accuracy, report.macro_f1};
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);

    if (report.accuracy > best_acc) {
      best_acc = report.accuracy;
      result.best_params = params.clone();
      result.best_report = report;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (train_config.patience > 0 && ++since_best >= train_config.patience) {
      break;
    }
  }
  return result;
}

void write_epoch_log_csv(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,train_loss,test_acc,test_macro_f1\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.8f,%.6f,%.6f\n", row.epoch, row.train_loss, row.test_accuracy,
                  row.test_macro_f1);
    out << buf;
  }
}

// ---- experiments -----------------------------------------------------------

RunOutcome run_experiment(const Dataset& data, const model::ModelConfig& model_config,
                          const TrainConfig& train_config, const EpochCallback& on_epoch) {
  model_config.validate();
  const auto train = model::prepare_all(data.train, data.vocab, data.sdi, model_config);
  const auto test = model::prepare_all(data.test, data.vocab, data.sdi, model_config);
  auto params = model::ModelParams::init(model_config, data.vocab.size(), model_config.seed, &data.embeddings);
  return {train_epochs(std::move(params), train, test, model_config, train_config, on_epoch), model_config};
}

std::vector<SweepRow> layer_sweep(std::span<const std::size_t> layer_values, const Dataset& data,
                                  const model::ModelConfig& model_config, const TrainConfig& train_config) {
  if (layer_values.empty()) throw std::invalid_argument("layer sweep needs at least one layer count");
  std::set<std::size_t> seen;
  for (auto l : layer_values) {
    if (l == 0) throw std::invalid_argument("layer counts must be >= 1");
    if (!seen.insert(l).second) throw std::invalid_argument("duplicate layer count " + std::to_string(l));
  }
  std::vector<SweepRow> rows;
  for (auto l : layer_values) {
    model::ModelConfig cfg = model_config;
    cfg.gcn_layers = l;
    const auto outcome = run_experiment(data, cfg, train_config);
    rows.push_back({l, outcome.result.best_report.accuracy, outcome.result.best_report.macro_f1});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "layers,acc,macro_f1\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", r.layers, r.accuracy, r.macro_f1);
    out << buf;
  }
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "full") return Variant::full;
  if (name == "no-dependency") return Variant::no_dependency;
  if (name == "no-edge-weight") return Variant::no_edge_weight;
  if (name == "no-bidirectional") return Variant::no_bidirectional;
  return std::nullopt;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_dependency: return "no-dependency";
    case Variant::no_edge_weight: return "no-edge-weight";
    case Variant::no_bidirectional: return "no-bidirectional";
  }
  return "?";
}

model::ModelConfig apply_variant(model::ModelConfig config, Variant v) {
  switch (v) {
    case Variant::full: break;
    case Variant::no_dependency: config.no_dependency = true; break;
    case Variant::no_edge_weight: config.no_edge_weight = true; break;
    case Variant::no_bidirectional: config.no_bidirectional = true; break;
  }
  return config;
}

MetricsReport run_ablation(Variant variant, const Dataset& data, const model::ModelConfig& model_config,
                           const TrainConfig& train_config) {
  auto report = run_experiment(data, apply_variant(model_config, variant), train_config).result.best_report;
  report.variant = std::string(to_string(variant));
  return report;
}

}  // namespace eegcn::train
