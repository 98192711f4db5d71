// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Config closed-world validation and hashing, checkpoint round trips, AdamW
// arithmetic, dataset build determinism, train/resume/eval plumbing on a
// reduced model, and render output contracts.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "casp/harness.hpp"
#include "casp/ops.hpp"
#include "doctest.h"

using namespace casp;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Small but complete run configuration that trains in well under a second.
RunConfig tiny_cfg() {
  RunConfig cfg = preset_config("desk");
  cfg.d = 16;
  cfg.attn_layers = 1;
  cfg.train_samples = 6;
  cfg.eval_samples = 3;
  cfg.batch_size = 3;
  cfg.epochs = 2;
  cfg.seed = 11;
  return cfg;
}

RunConfig built_tiny(const Scratch& s) {
  RunConfig cfg = tiny_cfg();
  DatasetPaths paths = cmd_build_dataset(cfg, s / "data");
  cfg.manifest = paths.train_manifest;
  cfg.eval_manifest = paths.eval_manifest;
  return cfg;
}

}  // namespace

TEST_CASE("config files validate closed-world and override presets") {
  Scratch s("casp_hs_config");
  write_file(s / "ok.json", R"({"d": 16, "epochs": 3, "mix": {"fork": 1.0}})");
  RunConfig cfg = load_run_config(s / "ok.json");
  CHECK(cfg.d == 16);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.mix.fork == 1.0);
  CHECK(cfg.mix.straight == 0.0);
  CHECK(cfg.grid.h == 76);  // desk preset
  CHECK(cfg.batch_size == 16);

  write_file(s / "bad.json", R"({"d": 16, "learning_rate": 0.1})");
  CHECK_THROWS_AS(load_run_config(s / "bad.json"), ConfigError);
  write_file(s / "badmix.json", R"({"mix": {"fork": 0.5, "roundabout": 0.5}})");
  CHECK_THROWS_AS(load_run_config(s / "badmix.json"), ConfigError);
  write_file(s / "badvariant.json", R"({"variant": "no-decoder"})");
  CHECK_THROWS_AS(load_run_config(s / "badvariant.json"), ConfigError);
  write_file(s / "badjson.json", "{");
  CHECK_THROWS_AS(load_run_config(s / "badjson.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(s / "missing.json"), IoError);
  CHECK_THROWS_AS(preset_config("laptop"), ConfigError);

  // Paper preset scales up; the override flag wins over the file key.
  write_file(s / "paper.json", R"({"preset": "paper"})");
  CHECK(load_run_config(s / "paper.json").grid.h == 152);
  CHECK(load_run_config(s / "paper.json", "desk").grid.h == 76);
}

TEST_CASE("config hash tracks semantic fields only") {
  RunConfig a = preset_config("desk");
  RunConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);

  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.variant = "no-recurrence";
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.optim.lr = 2e-3;
  CHECK(config_hash(a) != config_hash(b));

  // Paths and log cadence do not change the identity of a run.
  b = a;
  b.manifest = "elsewhere/manifest.tsv";
  b.snapshot_every = 7;
  b.checkpoint_every = 3;
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("checkpoint save, load, save is bitwise idempotent") {
  Scratch s("casp_hs_ckpt");
  Rng rng(5);
  Checkpoint ckpt;
  ckpt.config_hash = "0123456789abcdef";
  ckpt.step = 42;
  ckpt.epoch = 3;
  ckpt.rng_state = rng.save_state();
  for (int i = 0; i < 3; ++i) {
    Tensor t({2, (std::size_t)(i + 1)});
    float* p = t.mutable_data();
    for (std::size_t k = 0; k < t.size(); ++k) p[k] = (float)rng.uniform(-2, 2);
    const std::string name = "layer" + std::to_string(i) + ".w";
    ckpt.params.emplace_back(name, t);
    ckpt.moment1.emplace_back(name, Tensor::full(t.shape(), 0.25f));
    ckpt.moment2.emplace_back(name, Tensor::full(t.shape(), 0.5f));
  }

  save_checkpoint(ckpt, s / "a.ckpt");
  Checkpoint back = load_checkpoint(s / "a.ckpt");
  CHECK(back.config_hash == ckpt.config_hash);
  CHECK(back.step == 42);
  CHECK(back.epoch == 3);
  CHECK(back.rng_state == ckpt.rng_state);
  REQUIRE(back.params.size() == 3);
  CHECK(back.params[1].first == "layer1.w");
  CHECK(back.params[2].second.shape() == std::vector<std::size_t>{2, 3});

  save_checkpoint(back, s / "b.ckpt");
  CHECK(read_file(s / "a.ckpt") == read_file(s / "b.ckpt"));

  // The restored rng continues exactly where the saved one left off.
  Rng a(5), b(5);
  std::string state = a.save_state();
  b.load_state(state);
  CHECK(a.bits() == b.bits());
}

TEST_CASE("corrupt checkpoints are rejected") {
  Scratch s("casp_hs_ckpt_bad");
  Checkpoint ckpt;
  ckpt.config_hash = "x";
  ckpt.rng_state = Rng(1).save_state();
  ckpt.params.emplace_back("p", Tensor::full({4}, 1.0f));
  ckpt.moment1.emplace_back("p", Tensor({4}));
  ckpt.moment2.emplace_back("p", Tensor({4}));
  save_checkpoint(ckpt, s / "good.ckpt");

  std::string bytes = read_file(s / "good.ckpt");
  std::string flipped = bytes;
  flipped[flipped.size() - 8] ^= 0x01;  // payload byte; CRC no longer matches
  write_file(s / "crc.ckpt", flipped);
  CHECK_THROWS_AS(load_checkpoint(s / "crc.ckpt"), IoError);

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  write_file(s / "magic.ckpt", wrong_magic);
  CHECK_THROWS_AS(load_checkpoint(s / "magic.ckpt"), IoError);

  write_file(s / "short.ckpt", bytes.substr(0, 20));
  CHECK_THROWS_AS(load_checkpoint(s / "short.ckpt"), IoError);
}

TEST_CASE("adamw first step matches the closed form") {
  ParamStore ps;
  ps.put("p", Tensor::full({1}, 1.0f));
  OptimConfig oc;
  AdamW opt(ps, oc);

  Tape<float> tape;
  Tensor p = tape.leaf(ps.at("p"));
  Tensor loss = scale(p, 0.5f);  // dL/dp = 0.5
  auto grads = tape.backward(loss);
  opt.step(tape, grads);

  // m-hat = g, v-hat = g^2, so the update is lr * (1 / (1 + eps') + wd * p).
  // The result lands in a float slot, so compare at float precision.
  const double expected = 1.0 - 1e-3 * (0.5 / (0.5 + 1e-8) + 1e-4 * 1.0);
  CHECK(std::abs((double)ps.at("p").data()[0] - expected) < 1e-7);
  CHECK(opt.steps() == 1);
}

TEST_CASE("dataset builds are deterministic and honor the mix") {
  Scratch s("casp_hs_data");
  RunConfig cfg = tiny_cfg();
  cfg.train_samples = 8;
  cfg.mix = DatasetMix{0.0, 0.0, 0.5, 0.5};

  const std::string m1 = build_split(cfg, s / "one", 99, 8);
  const std::string m2 = build_split(cfg, s / "two", 99, 8);
  auto entries = read_manifest(m1);
  REQUIRE(entries.size() == 8);
  std::size_t forks = 0, tjs = 0;
  for (const auto& e : entries) {
    forks += e.kind == SceneKind::fork;
    tjs += e.kind == SceneKind::t_junction;
  }
  CHECK(forks == 4);
  CHECK(tjs == 4);
  for (std::size_t i = 0; i < entries.size(); ++i)
    CHECK(read_file(s / ("one/" + entries[i].path)) == read_file(s / ("two/" + entries[i].path)));

  // Different salts give different scenes.
  const std::string m3 = build_split(cfg, s / "three", 100, 8);
  bool any_differs = false;
  for (const auto& e : read_manifest(m3))
    any_differs |= read_file(s / ("three/" + e.path)) != read_file(s / ("one/" + e.path));
  CHECK(any_differs);

  LoadedDataset data = load_dataset(m1);
  CHECK(data.samples.size() == 8);
  CHECK(data.grid.h == cfg.grid.h);
}

TEST_CASE("training is deterministic and resume reproduces the loss sequence") {
  Scratch s("casp_hs_train");
  RunConfig cfg = built_tiny(s);
  cfg.checkpoint_every = 1;

  TrainResult r1 = cmd_train(cfg, s / "run1");
  TrainResult r2 = cmd_train(cfg, s / "run2");
  CHECK(read_file(s / "run1/loss.log") == read_file(s / "run2/loss.log"));
  CHECK(read_file(s / "run1/metrics.log") == read_file(s / "run2/metrics.log"));
  CHECK(r1.steps == 4);  // 6 samples / batch 3 = 2 steps x 2 epochs
  REQUIRE(r1.epoch_mean_loss.size() == 2);

  TrainResult r3 = cmd_train(cfg, s / "run3", s / "run1/checkpoint_epoch_0001.ckpt");
  CHECK(r3.epoch_mean_loss.size() == 1);
  CHECK(r3.epoch_mean_loss[0] == r1.epoch_mean_loss[1]);
  CHECK(read_file(s / "run1/checkpoint_final.ckpt") == read_file(s / "run3/checkpoint_final.ckpt"));

  // The final checkpoint reloads into an identical model.
  Checkpoint ckpt = load_checkpoint(r1.checkpoint_path);
  CHECK(ckpt.epoch == 2);
  CHECK(ckpt.config_hash == config_hash(cfg));
  ModelBundle mb = restore_model(cfg, ckpt);
  CHECK(mb.ps.size() == ckpt.params.size());
}

TEST_CASE("a diverging run aborts with the offending batch seed") {
  Scratch s("casp_hs_nan");
  RunConfig cfg = built_tiny(s);
  cfg.optim.lr = 1e18;  // weight decay compounds the blowup past float range
  cfg.epochs = 8;
  try {
    cmd_train(cfg, s / "run");
    FAIL("expected the trainer to abort");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("batch_seed=") != std::string::npos);
  }
}

TEST_CASE("eval refuses mismatched configs and reports deterministically") {
  Scratch s("casp_hs_eval");
  RunConfig cfg = built_tiny(s);
  TrainResult tr = cmd_train(cfg, s / "run");

  auto rec1 = cmd_eval(cfg, tr.checkpoint_path, cfg.eval_manifest, s / "rep1.txt");
  auto rec2 = cmd_eval(cfg, tr.checkpoint_path, cfg.eval_manifest, s / "rep2.txt");
  CHECK(read_file(s / "rep1.txt") == read_file(s / "rep2.txt"));
  REQUIRE(rec1.size() == 4);
  CHECK(rec1[0].metric == "min_ade");
  CHECK(rec1[0].k == 5);
  CHECK(rec1[0].n_samples == 3);
  CHECK(rec1[0].config_hash == config_hash(cfg));
  for (const auto& r : rec1) CHECK(std::isfinite(r.value));

  RunConfig other = cfg;
  other.seed = 999;
  CHECK_THROWS_AS(cmd_eval(other, tr.checkpoint_path, cfg.eval_manifest, ""), ConfigError);

  // Variant changes the parameter set; the hash refuses before any shape trip.
  RunConfig variant = cfg;
  variant.variant = "no-mode-queries";
  CHECK_THROWS_AS(cmd_eval(variant, tr.checkpoint_path, cfg.eval_manifest, ""), ConfigError);
}

TEST_CASE("ablation matrix marks failing variants and keeps going") {
  Scratch s("casp_hs_ablate");
  RunConfig cfg = built_tiny(s);
  cfg.epochs = 1;

  auto rows = cmd_ablate(cfg, s / "ablate");
  REQUIRE(rows.size() == 5);
  std::set<std::string> seen;
  for (const auto& row : rows) {
    seen.insert(row.variant);
    CHECK(row.ok);
    REQUIRE(row.metrics.size() == 4);
    CHECK(row.avg_epoch_seconds > 0);
  }
  CHECK(seen.count("baseline") == 1);
  CHECK(seen.count("no-mode-queries") == 1);
  const std::string report = read_file(s / "ablate/ablate_report.txt");
  CHECK(report.find("variant=baseline status=ok") != std::string::npos);
  CHECK(report.find("metric=min_ade") != std::string::npos);
}

TEST_CASE("render writes deterministic images with distinct mode colors") {
  Scratch s("casp_hs_render");
  RunConfig cfg = tiny_cfg();
  build_split(cfg, s / "data", 7, 1);
  RasterSample sample = read_sample(s / "data/sample_00000.casp");

  // Five well separated straight-line trajectories.
  const std::size_t modes = 5, steps = 4;
  TrajectoryPrediction pred;
  pred.mu = Tensor({1, modes, steps, 2});
  float* mp = pred.mu.mutable_data();
  for (std::size_t m = 0; m < modes; ++m)
    for (std::size_t t = 0; t < steps; ++t) {
      mp[(m * steps + t) * 2] = sample.anchor.x + ((float)m - 2.0f) * 8.0f * (t + 1) / steps;
      mp[(m * steps + t) * 2 + 1] = sample.anchor.y - 10.0f * (t + 1) / steps;
    }
  pred.b = Tensor::full({1, modes, steps, 2}, 1.0f);
  pred.pi = Tensor::full({1, modes}, 0.2f);

  render_ppm(sample, &pred, s / "a.ppm", 4);
  render_ppm(sample, &pred, s / "b.ppm", 4);
  const std::string img = read_file(s / "a.ppm");
  CHECK(img == read_file(s / "b.ppm"));
  CHECK(img.substr(0, 2) == "P6");

  auto has_color = [](const std::string& ppm, unsigned char r, unsigned char g, unsigned char b) {
    const std::size_t head = ppm.find("255\n") + 4;
    for (std::size_t i = head; i + 2 < ppm.size(); i += 3)
      if ((unsigned char)ppm[i] == r && (unsigned char)ppm[i + 1] == g &&
          (unsigned char)ppm[i + 2] == b)
        return true;
    return false;
  };
  CHECK(has_color(img, 230, 60, 60));
  CHECK(has_color(img, 240, 160, 40));
  CHECK(has_color(img, 230, 230, 70));
  CHECK(has_color(img, 70, 220, 220));
  CHECK(has_color(img, 225, 80, 225));
  CHECK(has_color(img, 35, 55, 115));  // drivable area

  // Background-only image: no mode palette anywhere.
  render_ppm(sample, nullptr, s / "bg.ppm", 4);
  const std::string bg = read_file(s / "bg.ppm");
  CHECK_FALSE(has_color(bg, 230, 60, 60));
  CHECK_FALSE(has_color(bg, 225, 80, 225));
}

TEST_CASE("sample files round-trip bitwise through the container") {
  Scratch s("casp_hs_roundtrip");
  RunConfig cfg = tiny_cfg();
  build_split(cfg, s / "data", 21, 2);
  for (const auto& e : read_manifest(s / "data/manifest.tsv")) {
    RasterSample sample = read_sample(s / ("data/" + e.path));
    write_sample(sample, s / "again.casp");
    CHECK(read_file(s / ("data/" + e.path)) == read_file(s / "again.casp"));
  }
}
