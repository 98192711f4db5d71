// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: build-dataset, train, eval, ablate, render.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "casp/harness.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string preset;
  std::string variant;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON run configuration");
  cmd->add_option("--preset", args.preset, "grid preset: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--variant", args.variant, "ablation variant to train or evaluate");
  cmd->add_option("--out", args.out, "output directory or file");
}

casp::RunConfig resolve_config(const CommonArgs& args, const std::string& data_dir) {
  casp::RunConfig cfg =
      args.config.empty()
          ? casp::preset_config(args.preset.empty() ? "desk" : args.preset)
          : casp::load_run_config(args.config, args.preset);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.variant.empty()) {
    casp::ablation_variant(args.variant);  // rejects unknown names
    cfg.variant = args.variant;
  }
  if (!data_dir.empty()) {
    cfg.manifest = data_dir + "/train/manifest.tsv";
    cfg.eval_manifest = data_dir + "/eval/manifest.tsv";
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory prediction harness"};
  app.require_subcommand(1);

  CommonArgs build_args, train_args, eval_args, ablate_args, render_args;
  std::string train_data, eval_data, ablate_data, resume;
  std::string eval_checkpoint, eval_manifest;
  std::string render_sample, render_checkpoint;
  int render_scale = 4;

  CLI::App* build = app.add_subcommand("build-dataset", "generate train and eval splits");
  add_common(build, build_args);

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train, train_args);
  train->add_option("--data", train_data, "dataset directory from build-dataset");
  train->add_option("--resume", resume, "checkpoint to continue from");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--manifest", eval_manifest, "manifest of the split to score");
  eval->add_option("--data", eval_data, "dataset directory (scores its eval split)");

  CLI::App* ablate = app.add_subcommand("ablate", "train and compare every variant");
  add_common(ablate, ablate_args);
  ablate->add_option("--data", ablate_data, "dataset directory from build-dataset");

  CLI::App* render = app.add_subcommand("render", "draw a sample and optional prediction");
  add_common(render, render_args);
  render->add_option("--sample", render_sample, "sample file to draw")->required();
  render->add_option("--checkpoint", render_checkpoint, "overlay this model's prediction");
  render->add_option("--scale", render_scale, "pixels per grid cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      casp::RunConfig cfg = resolve_config(build_args, "");
      casp::DatasetPaths paths = casp::cmd_build_dataset(cfg, build_args.out);
      std::printf("train manifest: %s\n", paths.train_manifest.c_str());
      std::printf("eval manifest: %s\n", paths.eval_manifest.c_str());
    } else if (train->parsed()) {
      casp::RunConfig cfg = resolve_config(train_args, train_data);
      casp::TrainResult res = casp::cmd_train(cfg, train_args.out, resume);
      std::printf("steps=%llu final_mean_loss=%.6g avg_epoch_s=%.3f\n",
                  (unsigned long long)res.steps,
                  res.epoch_mean_loss.empty() ? 0.0 : res.epoch_mean_loss.back(),
                  res.avg_epoch_seconds);
      std::printf("checkpoint: %s\n", res.checkpoint_path.c_str());
    } else if (eval->parsed()) {
      casp::RunConfig cfg = resolve_config(eval_args, eval_data);
      const std::string manifest =
          !eval_manifest.empty() ? eval_manifest : cfg.eval_manifest;
      if (manifest.empty())
        throw casp::UsageError("eval needs --manifest or --data");
      auto records = casp::cmd_eval(cfg, eval_checkpoint, manifest, eval_args.out + "/report.txt");
      for (const auto& r : records) std::printf("%s\n", casp::format_metric_record(r).c_str());
    } else if (ablate->parsed()) {
      casp::RunConfig cfg = resolve_config(ablate_args, ablate_data);
      auto rows = casp::cmd_ablate(cfg, ablate_args.out);
      for (const auto& row : rows) {
        if (row.ok) {
          std::printf("variant=%s status=ok avg_epoch_s=%.3f\n", row.variant.c_str(),
                      row.avg_epoch_seconds);
          for (const auto& r : row.metrics)
            std::printf("variant=%s %s\n", row.variant.c_str(),
                        casp::format_metric_record(r).c_str());
        } else {
          std::printf("variant=%s status=failed error=%s\n", row.variant.c_str(),
                      row.error.c_str());
        }
      }
    } else if (render->parsed()) {
      casp::RasterSample sample = casp::read_sample(render_sample);
      std::string out = render_args.out;
      if (out == "out") out = "render.ppm";
      if (render_checkpoint.empty()) {
        casp::render_ppm(sample, nullptr, out, render_scale);
      } else {
        casp::RunConfig cfg = resolve_config(render_args, "");
        casp::Checkpoint ckpt = casp::load_checkpoint(render_checkpoint);
        casp::ModelBundle mb = casp::restore_model(cfg, ckpt);
        casp::LoadedDataset one;
        one.samples.push_back(sample);
        one.grid = sample.grid;
        casp::Batch batch = casp::make_batch(one, {0}, 0, 1, false, nullptr);
        casp::TrajectoryPrediction pred = casp::predict(*mb.model, batch);
        casp::render_ppm(sample, &pred, out, render_scale);
      }
      std::printf("image: %s\n", out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
