#pragma once

// Command implementations behind the eegcn executable. Each run_* function
// returns a process exit code:
//   0 success, 2 bad flags or configuration, 3 data errors,
//   4 non-finite loss, 5 checkpoint version mismatch, 1 anything else.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eegcn/model.hpp"
#include "eegcn/train.hpp"

namespace eegcn::app {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDataError = 3,
  kNonFinite = 4,
  kVersionMismatch = 5,
};

class UsageError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Every model and training knob, resolved from defaults, an optional
// key = value file, and command-line overrides (in that order).
struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  std::size_t min_count = 1;

  // Throws UsageError on an unknown key or unparsable value.
  void set(std::string_view key, std::string_view value);
  void set_seed(std::uint64_t seed);
  void load_file(const std::filesystem::path& path);
  // One "key = value" line per field, in a fixed order.
  std::string to_text() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct DataPaths {
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path parses_train;
  std::filesystem::path parses_test;
  std::filesystem::path glove;
};

// Loads examples and parses, builds the vocabulary over train and test
// tokens, reads embeddings, and counts SDI statistics over train parses.
train::Dataset load_dataset(const DataPaths& paths, const RunConfig& config);

struct RunManifest {
  std::string command;
  RunConfig config;
  DataPaths inputs;
  std::vector<std::pair<std::string, std::string>> digests;  // role -> sha256
  std::filesystem::path output_dir;
  std::string started_at;
  std::string finished_at;
  std::optional<std::string> variant;
  std::vector<std::size_t> layers;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
  // Throws corpus::DataError when an input no longer matches its digest.
  void verify_inputs() const;
};

std::string utc_timestamp();

RunManifest make_manifest(std::string command, const RunConfig& config, const DataPaths& paths,
                          const std::filesystem::path& out);

struct TrainOptions {
  DataPaths paths;
  RunConfig config;
  std::filesystem::path out;
  std::optional<train::Variant> variant;  // set by the ablate command
  bool print_report = false;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path test;
  std::filesystem::path parses_test;
};

struct SweepOptions {
  DataPaths paths;
  RunConfig config;
  std::filesystem::path out;
  std::vector<std::size_t> layers;
};

// "1,2,3" or "1..6"; throws UsageError on junk, zero, or duplicates.
std::vector<std::size_t> parse_layer_list(std::string_view text);

int run_train(const TrainOptions& options);
int run_eval(const EvalOptions& options);
int run_sweep(const SweepOptions& options);

// Translates exceptions from body into the exit-code contract.
int guarded(const std::function<int()>& body);

}  // namespace eegcn::app
