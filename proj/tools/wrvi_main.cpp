// Command-line entry point for training and querying the emulators.

#include <string>

#include "CLI11.hpp"
#include "wrvi/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"wrvi: probabilistic forward/inverse PDE emulators trained without solves"};
  app.require_subcommand(1);

  wrvi::cli::CommonOptions opt;
  std::uint64_t seed_value = 0;
  int n_draws_value = 0;
  int n_samples_value = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path, "experiment config (JSON)");
    if (needs_config) c->required();
    sub->add_option("--out-dir", opt.out_dir_override, "override the config's output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { opt.seed_override = v; }, "override the seed");
  };

  auto* train = app.add_subcommand("train", "run solver-free training");
  add_common(train, true);
  train->add_option("--resume", opt.resume_path, "checkpoint to resume from");

  auto* eval = app.add_subcommand("eval", "score a checkpoint against the oracle");
  add_common(eval, true);
  eval->add_option("--checkpoint", opt.checkpoint_path, "trained checkpoint")->required();
  eval->add_option_function<int>(
      "--n-draws", [&](const int& v) { opt.n_draws_override = v; }, "prior draws to evaluate");

  auto* predict = app.add_subcommand("predict", "run the forward or inverse map on CSV rows");
  add_common(predict, true);
  predict->add_option("--checkpoint", opt.checkpoint_path, "trained checkpoint")->required();
  predict->add_option("--direction", opt.direction, "forward or inverse")->required();
  predict->add_option("--input", opt.input_path, "input CSV")->required();
  predict->add_option("--out", opt.output_path, "output CSV (stdout when omitted)");

  auto* otrain = app.add_subcommand("observe-train", "train the observation encoder");
  add_common(otrain, true);
  otrain->add_option("--checkpoint", opt.checkpoint_path, "pretrained checkpoint")->required();

  auto* oinfer = app.add_subcommand("observe-infer", "parameter posteriors from observations");
  add_common(oinfer, true);
  oinfer->add_option("--checkpoint", opt.checkpoint_path, "encoder checkpoint")->required();
  oinfer->add_option("--input", opt.input_path, "CSV of f+y rows")->required();
  oinfer->add_option_function<int>(
      "--n-samples", [&](const int& v) { opt.n_samples_override = v; },
      "mixture components per observation");

  auto* scan = app.add_subcommand("scan", "residual/stdev heatmap over the parameter plane");
  add_common(scan, true);
  scan->add_option("--checkpoint", opt.checkpoint_path, "trained checkpoint")->required();

  auto* sweep = app.add_subcommand("sweep", "repeat training across residual stdev settings");
  add_common(sweep, true);

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return wrvi::cli::cmd_train(opt);
  if (eval->parsed()) return wrvi::cli::cmd_eval(opt);
  if (predict->parsed()) return wrvi::cli::cmd_predict(opt);
  if (otrain->parsed()) return wrvi::cli::cmd_observe_train(opt);
  if (oinfer->parsed()) return wrvi::cli::cmd_observe_infer(opt);
  if (scan->parsed()) return wrvi::cli::cmd_scan(opt);
  if (sweep->parsed()) return wrvi::cli::cmd_sweep(opt);
  return wrvi::cli::kExitConfig;
}
