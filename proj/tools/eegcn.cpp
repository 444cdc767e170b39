// eegcn: train, evaluate, sweep GCN depth, and run ablations.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eegcn/app.hpp"

namespace {

using eegcn::app::DataPaths;
using eegcn::app::RunConfig;

struct CommonFlags {
  DataPaths paths;
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;

  void add_to(CLI::App* cmd, bool with_out = true) {
    cmd->add_option("--train", paths.train, "Training examples (JSON lines)");
    cmd->add_option("--test", paths.test, "Test examples (JSON lines)");
    cmd->add_option("--parses-train", paths.parses_train, "CoNLL-U parses aligned with --train");
    cmd->add_option("--parses-test", paths.parses_test, "CoNLL-U parses aligned with --test");
    cmd->add_option("--glove", paths.glove, "Embeddings in GloVe text format");
    cmd->add_option("--config", config_file, "key = value configuration file");
    cmd->add_option("--set", overrides, "Override a configuration key (key=value), repeatable");
    cmd->add_option("--seed", seed, "Random seed for initialization, shuffling and dropout");
    if (with_out) cmd->add_option("--out", out, "Output directory");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_file.empty()) config.load_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw eegcn::app::UsageError("--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) config.set_seed(*seed);
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-level sentiment classification with an edge-weighted bidirectional GCN"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string manifest_path;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write manifest, checkpoint, epoch log and report");
  train_flags.add_to(train_cmd);
  train_cmd->add_option("--manifest", manifest_path, "Re-run the inputs, configuration and seed of a manifest");

  eegcn::app::EvalOptions eval_opts;
  std::string eval_checkpoint, eval_test, eval_parses;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; prints a JSON report");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint written by train")->required();
  eval_cmd->add_option("--test", eval_test, "Test examples (JSON lines)")->required();
  eval_cmd->add_option("--parses-test", eval_parses, "CoNLL-U parses aligned with --test")->required();

  CommonFlags sweep_flags;
  std::string layers_text;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one model per GCN depth; writes layers,acc,macro_f1 CSV");
  sweep_flags.add_to(sweep_cmd);
  sweep_cmd->add_option("--layers", layers_text, "Layer counts, e.g. 1,2,3 or 1..6")->required();

  CommonFlags ablate_flags;
  std::string variant_text;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train one ablation variant; prints a tagged JSON report");
  ablate_flags.add_to(ablate_cmd);
  ablate_cmd->add_option("--variant", variant_text, "full | no-dependency | no-edge-weight | no-bidirectional")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return eegcn::app::kUsage;
  }

  CLI::App* active = nullptr;
  const int code = eegcn::app::guarded([&]() -> int {
    if (*train_cmd) {
      active = train_cmd;
      eegcn::app::TrainOptions opts;
      if (!manifest_path.empty()) {
        if (train_flags.out.empty()) throw eegcn::app::UsageError("--out is required");
        const auto manifest = eegcn::app::RunManifest::load(manifest_path);
        manifest.verify_inputs();
        opts.paths = manifest.inputs;
        opts.config = manifest.config;
        if (manifest.variant) opts.variant = eegcn::train::parse_variant(*manifest.variant);
      } else {
        opts.paths = train_flags.paths;
        opts.config = train_flags.resolve();
      }
      opts.out = train_flags.out;
      return eegcn::app::run_train(opts);
    }
    if (*eval_cmd) {
      active = eval_cmd;
      return eegcn::app::run_eval({eval_checkpoint, eval_test, eval_parses});
    }
    if (*sweep_cmd) {
      active = sweep_cmd;
      return eegcn::app::run_sweep(
          {sweep_flags.paths, sweep_flags.resolve(), sweep_flags.out, eegcn::app::parse_layer_list(layers_text)});
    }
    active = ablate_cmd;
    const auto variant = eegcn::train::parse_variant(variant_text);
    if (!variant) throw eegcn::app::UsageError("unknown variant '" + variant_text + "'");
    eegcn::app::TrainOptions opts{ablate_flags.paths, ablate_flags.resolve(), ablate_flags.out, variant, true};
    return eegcn::app::run_train(opts);
  });
  if (code == eegcn::app::kUsage && active) std::cerr << '\n' << active->help();
  return code;
}
