#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "eegcn/app.hpp"
#include "eegcn/optim.hpp"

namespace eegcn::app {

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::stderr_color_mt("eegcn");
    l->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    const char* level = std::getenv("EEGCN_LOG_LEVEL");
    l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
    return l;
  }();
  return log;
}

void validate_config(const RunConfig& config) {
  try {
    config.model.validate();
    config.train.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void require_paths(const DataPaths& p) {
  const std::vector<std::pair<const char*, const std::filesystem::path*>> flags = {
      {"--train", &p.train},
      {"--test", &p.test},
      {"--parses-train", &p.parses_train},
      {"--parses-test", &p.parses_test},
      {"--glove", &p.glove}};
  for (const auto& [flag, path] : flags) {
    if (path->empty()) throw UsageError(std::string(flag) + " is required");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<corpus::Example> load_with_parses(const std::filesystem::path& examples,
                                              const std::filesystem::path& parses) {
  auto out = corpus::load_examples(examples);
  corpus::attach_parses(out, corpus::parse_conllu(parses), parses.string());
  return out;
}

}  // namespace

train::Dataset load_dataset(const DataPaths& paths, const RunConfig& config) {
  train::Dataset data;
  data.train = load_with_parses(paths.train, paths.parses_train);
  data.test = load_with_parses(paths.test, paths.parses_test);

  std::vector<std::vector<std::string>> sentences;
  for (const auto* split : {&data.train, &data.test})
    for (const auto& ex : *split) sentences.push_back(ex.tokens);
  data.vocab = corpus::build_vocab(sentences, config.min_count);

  auto table = corpus::load_glove(paths.glove, data.vocab, config.model.seed, config.model.embed_dim);
  logger()->info("vocabulary {} tokens, {} found in {}", data.vocab.size(), table.found, paths.glove.string());
  data.embeddings = std::move(table.matrix);

  std::vector<corpus::DependencyGraph> graphs;
  for (const auto& ex : data.train) graphs.push_back(*ex.parse);
  try {
    data.sdi = graph::compute_sdi_table(graphs);
  } catch (const std::invalid_argument& e) {
    throw corpus::DataError(paths.parses_train.string(), 0, e.what());
  }
  return data;
}

std::vector<std::size_t> parse_layer_list(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v == 0) {
      throw UsageError("invalid layer count '" + std::string(s) + "' in --layers " + std::string(text));
    }
    return v;
  };
  std::vector<std::size_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = number(text.substr(0, dots));
    const auto hi = number(text.substr(dots + 2));
    if (lo > hi) throw UsageError("empty layer range " + std::string(text));
    for (auto l = lo; l <= hi; ++l) out.push_back(l);
    return out;
  }
  std::set<std::size_t> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    const auto v = number(item);
    if (!seen.insert(v).second) throw UsageError("duplicate layer count " + std::to_string(v));
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

int run_train(const TrainOptions& options) {
  require_paths(options.paths);
  if (options.out.empty()) throw UsageError("--out is required");
  validate_config(options.config);
  std::filesystem::create_directories(options.out);

  auto manifest = make_manifest(options.variant ? "ablate" : "train", options.config, options.paths, options.out);
  if (options.variant) manifest.variant = std::string(train::to_string(*options.variant));
  manifest.write(options.out / "manifest.json");

  const auto data = load_dataset(options.paths, options.config);
  model::ModelConfig model_config = options.config.model;
  if (options.variant) model_config = train::apply_variant(model_config, *options.variant);
  logger()->info("training on {} examples, evaluating on {}", data.train.size(), data.test.size());

  const auto outcome = train::run_experiment(data, model_config, options.config.train, [](const train::EpochLog& e) {
    logger()->info("epoch {:3d}  loss {:.5f}  test acc {:.4f}  macro-F1 {:.4f}", e.epoch, e.train_loss,
                   e.test_accuracy, e.test_macro_f1);
  });
  const auto& result = outcome.result;

  model::save_checkpoint(options.out / "checkpoint.eegcn",
                         {outcome.model_config, data.vocab, data.sdi, result.best_params});
  {
    std::ofstream log(options.out / "epoch_log.csv", std::ios::binary);
    train::write_epoch_log_csv(log, result.log);
  }
  auto report = result.best_report;
  if (options.variant) report.variant = std::string(train::to_string(*options.variant));
  const std::string report_text = report.to_json().dump(2) + "\n";
  write_text(options.out / "report.json", report_text);

  manifest.finished_at = utc_timestamp();
  manifest.write(options.out / "manifest.json");
  logger()->info("best epoch {}: accuracy {:.4f}, macro-F1 {:.4f}", result.best_epoch, report.accuracy,
                 report.macro_f1);
  if (options.print_report) std::cout << report_text;
  return kOk;
}

int run_eval(const EvalOptions& options) {
  if (options.checkpoint.empty() || options.test.empty() || options.parses_test.empty()) {
    throw UsageError("--checkpoint, --test and --parses-test are required");
  }
  if (!std::filesystem::exists(options.checkpoint)) {
    throw corpus::DataError(options.checkpoint.string(), 0, "checkpoint not found");
  }
  const auto ckpt = model::load_checkpoint(options.checkpoint);
  const auto test = load_with_parses(options.test, options.parses_test);
  const auto prepared = model::prepare_all(test, ckpt.vocab, ckpt.sdi, ckpt.config);
  std::size_t unseen = 0;
  for (const auto& ex : prepared) unseen += ex.adjacency.unseen_labels;
  if (unseen > 0) logger()->warn("{} dependency edges carry labels unseen in training", unseen);
  const auto report = train::evaluate(prepared, ckpt.params, ckpt.config);
  std::cout << report.to_json().dump(2) << '\n';
  return kOk;
}

int run_sweep(const SweepOptions& options) {
  require_paths(options.paths);
  if (options.out.empty()) throw UsageError("--out is required");
  if (options.layers.empty()) throw UsageError("--layers is required");
  validate_config(options.config);
  std::filesystem::create_directories(options.out);

  auto manifest = make_manifest("sweep", options.config, options.paths, options.out);
  manifest.layers = options.layers;
  manifest.write(options.out / "manifest.json");

  const auto data = load_dataset(options.paths, options.config);
  std::vector<train::SweepRow> rows;
  for (auto layers : options.layers) {
    const std::array<std::size_t, 1> one{layers};
    const auto row = train::layer_sweep(one, data, options.config.model, options.config.train).front();
    logger()->info("layers {}: accuracy {:.4f}, macro-F1 {:.4f}", row.layers, row.accuracy, row.macro_f1);
    rows.push_back(row);
  }
  std::ostringstream csv;
  train::write_sweep_csv(csv, rows);
  write_text(options.out / "sweep.csv", csv.str());
  manifest.finished_at = utc_timestamp();
  manifest.write(options.out / "manifest.json");
  std::cout << csv.str();
  return kOk;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const corpus::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const train::NonFiniteLossError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kNonFinite;
  } catch (const ad::NonFiniteError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kNonFinite;
  } catch (const model::VersionError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kVersionMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace eegcn::app
