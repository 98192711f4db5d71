// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: run configuration, dataset building, the training
// loop (AdamW, seeded shuffle, augmentation, checkpointing), evaluation,
// the ablation matrix, and image rendering.
//
// Determinism contract: (seed, config, worker count) fixes every number in
// the loss and metric logs bitwise. Wall-clock times go to a separate timing
// log. The config hash (FNV-1a over the canonical serialization) is embedded
// in checkpoints and metric records; mismatches are refused before compute.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "casp/model.hpp"
#include "casp/objective.hpp"
#include "casp/params.hpp"
#include "casp/raster_io.hpp"
#include "casp/scene.hpp"
#include "casp/tensor.hpp"

namespace casp {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
};

// Scene-kind fractions for dataset building; normalized, counts assigned by
// largest remainder so requested totals are met exactly.
struct DatasetMix {
  double straight = 0.25;
  double curve = 0.25;
  double t_junction = 0.25;
  double fork = 0.25;
};

struct RunConfig {
  std::string preset = "desk";  // fixes the grid; "desk" or "paper"
  GridConfig grid;
  std::size_t d = 32;
  std::size_t levels = 4;
  std::size_t heads = 8;
  std::size_t points = 4;
  std::size_t attn_layers = 2;
  std::size_t modes = 5;
  std::size_t r_steps = 3;
  OptimConfig optim;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::string variant = "baseline";
  std::string manifest;       // training split
  std::string eval_manifest;  // held-out split; empty disables snapshots
  bool augment = true;
  std::size_t snapshot_every = 0;    // extra held-out snapshots every n epochs
  std::size_t checkpoint_every = 0;  // intermediate checkpoints every n epochs
  std::size_t train_samples = 200;
  std::size_t eval_samples = 50;
  DatasetMix mix;

  ModelConfig model() const;
};

// Preset defaults; "paper" selects the full-scale grid and dimensions.
RunConfig preset_config(const std::string& preset);

// Reads a JSON config. Unknown keys are rejected (closed world). The preset
// (file key, overridable by the second argument) supplies defaults that the
// remaining keys override; the grid always comes from the preset.
RunConfig load_run_config(const std::string& path, const std::string& preset_override = "");

// Fixed-order "key=value" lines covering every semantically relevant field
// (paths and log cadences excluded); the hash is FNV-1a over these bytes.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpoints: magic "CASPCKPT", version, header (names, shapes, offsets),
// raw little-endian float payload, CRC32. save -> load -> save is bitwise
// idempotent.

struct Checkpoint {
  std::uint32_t version = 1;
  std::string config_hash;
  std::uint64_t step = 0;   // optimizer steps taken
  std::uint64_t epoch = 0;  // epochs completed
  std::string rng_state;
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, Tensor>> moment1;
  std::vector<std::pair<std::string, Tensor>> moment2;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Decoupled-weight-decay Adam over every tensor in the store. Parameters
// update in place through the store's shared buffers.

class AdamW {
 public:
  AdamW(ParamStore& ps, const OptimConfig& cfg);

  void step(Tape<float>& tape, const Gradients<float>& grads);

  std::uint64_t steps() const { return t_; }
  const std::vector<Tensor>& moment1() const { return m_; }
  const std::vector<Tensor>& moment2() const { return v_; }
  void load_moments(const Checkpoint& ckpt);

 private:
  ParamStore& ps_;
  OptimConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// ---------------------------------------------------------------------------
// Datasets.

// Generates `count` scenes per the config mix under dir and writes
// dir/manifest.tsv (only after every sample landed; a failed build leaves no
// manifest behind). Deterministic in (cfg.seed, salt). Returns the manifest
// path.
std::string build_split(const RunConfig& cfg, const std::string& dir, std::uint64_t salt,
                        std::size_t count);

struct DatasetPaths {
  std::string train_manifest;
  std::string eval_manifest;
};

// Builds out_dir/train and out_dir/eval with the configured sample counts.
DatasetPaths cmd_build_dataset(const RunConfig& cfg, const std::string& out_dir);

struct LoadedDataset {
  std::vector<RasterSample> samples;
  GridConfig grid;
};

LoadedDataset load_dataset(const std::string& manifest_path);

// Stacked training tensors for order[begin, begin+count).
struct Batch {
  Tensor statics;   // [B, 5, H, W]
  Tensor dynamics;  // [B, T_i, 9, H, W]
  Tensor gt;        // [B, T_o, 2] grid cells
  Tensor drivable;  // [B, H, W]
};

// rng drives augmentation and must be non-null when augmenting.
Batch make_batch(const LoadedDataset& data, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t count, bool augmenting, Rng* rng);

// ---------------------------------------------------------------------------
// Commands.

struct TrainResult {
  std::vector<double> epoch_mean_loss;
  double avg_epoch_seconds = 0;
  std::uint64_t steps = 0;
  std::string checkpoint_path;
};

// Writes loss.log / timing.log / metrics.log and checkpoints under out_dir.
// resume_path restores parameters, moments and the shuffle stream from an
// identical-config checkpoint and continues at its epoch. A non-finite loss
// aborts with the offending batch seed in the diagnostic.
TrainResult cmd_train(const RunConfig& cfg, const std::string& out_dir,
                      const std::string& resume_path = "");

// Metric snapshot of a model over a loaded split.
std::vector<MetricRecord> evaluate_model(const Model& model, const LoadedDataset& data,
                                         std::size_t batch_size, double resolution,
                                         const std::string& hash);

// Loads the checkpoint (refusing config-hash mismatches), evaluates over the
// manifest, writes one record per line to out_path when non-empty.
std::vector<MetricRecord> cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                                   const std::string& manifest_path,
                                   const std::string& out_path);

struct AblateRow {
  std::string variant;
  bool ok = false;
  std::string error;
  double avg_epoch_seconds = 0;
  std::vector<MetricRecord> metrics;
};

// Trains and evaluates every ablation variant on the same dataset; a failing
// variant is marked and the rest continue. Writes out_dir/ablate_report.txt.
std::vector<AblateRow> cmd_ablate(const RunConfig& cfg, const std::string& out_dir);

// Model plumbing shared by the commands: the store the model was built over
// plus the model itself (parameters stay shared with the store).
struct ModelBundle {
  ParamStore ps;
  std::unique_ptr<Model> model;
};

ModelBundle build_model(const RunConfig& cfg);
// Rebinds the checkpoint tensors; throws ConfigError on hash mismatch and
// ShapeError when the stored parameter set does not match the config's model.
ModelBundle restore_model(const RunConfig& cfg, const Checkpoint& ckpt);

// Forward pass without a tape.
TrajectoryPrediction predict(const Model& model, const Batch& batch);

// ---------------------------------------------------------------------------
// Rendering: binary PPM, `scale` pixels per grid cell. Layers from back to
// front: static channels, per-step agent occupancy (brighter = more recent),
// then one polyline per predicted mode in a distinct palette color. A null
// or empty prediction renders the scene only. Deterministic bytes.

void render_ppm(const RasterSample& sample, const TrajectoryPrediction* pred,
                const std::string& out_path, int scale = 4);

}  // namespace casp
