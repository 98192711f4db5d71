// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "casp/harness.hpp"
#include "casp/ops.hpp"

namespace fs = std::filesystem;

namespace casp {
namespace {

constexpr std::uint64_t kParamSalt = 0x70a7;
constexpr std::uint64_t kTrainSplitSalt = 0x7121;
constexpr std::uint64_t kEvalSplitSalt = 0xe7a1;

std::string fmt_loss(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void check_grid(const GridConfig& a, const GridConfig& b, const std::string& what) {
  if (a.h != b.h || a.w != b.w || a.t_in != b.t_in || a.t_out != b.t_out ||
      a.resolution != b.resolution)
    throw ConfigError(what + " grid does not match the configured preset");
}

// Largest-remainder apportionment of `count` over the mix fractions, kinds in
// enum order.
std::vector<SceneKind> kind_plan(const DatasetMix& mix, std::size_t count) {
  const double fracs[4] = {mix.straight, mix.curve, mix.t_junction, mix.fork};
  const double total = fracs[0] + fracs[1] + fracs[2] + fracs[3];
  std::size_t counts[4];
  double remainders[4];
  std::size_t assigned = 0;
  for (int k = 0; k < 4; ++k) {
    const double exact = static_cast<double>(count) * fracs[k] / total;
    counts[k] = static_cast<std::size_t>(exact);
    remainders[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  while (assigned < count) {
    int pick = 0;
    for (int k = 1; k < 4; ++k)
      if (remainders[k] > remainders[pick]) pick = k;
    ++counts[pick];
    remainders[pick] = -1;
    ++assigned;
  }
  std::vector<SceneKind> plan;
  plan.reserve(count);
  for (int k = 0; k < 4; ++k)
    plan.insert(plan.end(), counts[k], static_cast<SceneKind>(k));
  return plan;
}

}  // namespace

// ---------------------------------------------------------------------------
// Optimizer.

AdamW::AdamW(ParamStore& ps, const OptimConfig& cfg) : ps_(ps), cfg_(cfg) {
  m_.reserve(ps.size());
  v_.reserve(ps.size());
  for (const auto& [name, p] : ps.items()) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void AdamW::step(Tape<float>& tape, const Gradients<float>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  constexpr double kEps = 1e-8;
  for (std::size_t i = 0; i < ps_.size(); ++i) {
    Tensor param = ps_.items()[i].second;
    Tensor leaf = tape.leaf(param);
    if (!grads.has(leaf)) continue;
    const float* g = grads.grad(leaf).data();
    float* p = param.mutable_data();
    float* m = m_[i].mutable_data();
    float* v = v_[i].mutable_data();
    for (std::size_t k = 0; k < param.size(); ++k) {
      const double gk = g[k];
      const double mk = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      const double vk = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = (mk / bc1) / (std::sqrt(vk / bc2) + kEps) +
                            cfg_.weight_decay * static_cast<double>(p[k]);
      p[k] = static_cast<float>(p[k] - cfg_.lr * update);
    }
  }
}

void AdamW::load_moments(const Checkpoint& ckpt) {
  if (ckpt.moment1.size() != ps_.size() || ckpt.moment2.size() != ps_.size())
    throw ShapeError("checkpoint moments do not cover the parameter store");
  for (std::size_t i = 0; i < ps_.size(); ++i) {
    const auto& name = ps_.items()[i].first;
    if (ckpt.moment1[i].first != name || ckpt.moment2[i].first != name)
      throw ShapeError("checkpoint moment order mismatch at '" + name + "'");
    if (ckpt.moment1[i].second.shape() != m_[i].shape())
      throw ShapeError("checkpoint moment shape mismatch at '" + name + "'");
    m_[i] = ckpt.moment1[i].second;
    v_[i] = ckpt.moment2[i].second;
  }
  t_ = ckpt.step;
}

// ---------------------------------------------------------------------------
// Datasets.

std::string build_split(const RunConfig& cfg, const std::string& dir, std::uint64_t salt,
                        std::size_t count) {
  fs::create_directories(dir);
  const auto plan = kind_plan(cfg.mix, count);
  std::vector<ManifestEntry> entries(count);
  parallel_for(count, [&](std::size_t i) {
    const std::uint64_t seed = hash_mix(hash_mix(cfg.seed, salt), i);
    SceneSpec scene = generate_scene(seed, plan[i], cfg.grid);
    RasterSample sample = rasterize(scene, cfg.grid);
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%05zu.casp", i);
    write_sample(sample, dir + "/" + name);
    entries[i] = ManifestEntry{name, plan[i], seed};
  });
  const std::string manifest = dir + "/manifest.tsv";
  try {
    write_manifest(manifest, entries);
  } catch (...) {
    std::error_code ec;
    fs::remove(manifest, ec);
    throw;
  }
  return manifest;
}

DatasetPaths cmd_build_dataset(const RunConfig& cfg, const std::string& out_dir) {
  DatasetPaths paths;
  paths.train_manifest = build_split(cfg, out_dir + "/train", kTrainSplitSalt, cfg.train_samples);
  paths.eval_manifest = build_split(cfg, out_dir + "/eval", kEvalSplitSalt, cfg.eval_samples);
  return paths;
}

LoadedDataset load_dataset(const std::string& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  if (entries.empty()) throw UsageError("manifest " + manifest_path + " lists no samples");
  const std::string dir = parent_dir(manifest_path);
  LoadedDataset data;
  data.samples.resize(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    data.samples[i] = read_sample(dir + "/" + entries[i].path);
  });
  data.grid = data.samples[0].grid;
  for (const auto& s : data.samples) check_grid(s.grid, data.grid, "sample");
  return data;
}

Batch make_batch(const LoadedDataset& data, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t count, bool augmenting, Rng* rng) {
  if (augmenting && rng == nullptr) throw UsageError("augmentation needs an rng");
  const GridConfig& g = data.grid;
  const auto h = static_cast<std::size_t>(g.h);
  const auto w = static_cast<std::size_t>(g.w);
  const auto t_in = static_cast<std::size_t>(g.t_in);
  const auto t_out = static_cast<std::size_t>(g.t_out);
  const std::size_t fs = kStaticChannels, fd = kDynamicChannels;

  Batch batch;
  batch.statics = Tensor({count, fs, h, w});
  batch.dynamics = Tensor({count, t_in, fd, h, w});
  batch.gt = Tensor({count, t_out, 2});
  batch.drivable = Tensor({count, h, w});
  float* sp = batch.statics.mutable_data();
  float* dp = batch.dynamics.mutable_data();
  float* gp = batch.gt.mutable_data();
  float* rp = batch.drivable.mutable_data();

  for (std::size_t b = 0; b < count; ++b) {
    const RasterSample& base = data.samples[order[begin + b]];
    RasterSample aug;
    const RasterSample& s = augmenting ? (aug = augment(base, *rng)) : base;
    std::memcpy(sp + b * fs * h * w, s.statics.data(), fs * h * w * sizeof(float));
    std::memcpy(dp + b * t_in * fd * h * w, s.dynamics.data(),
                t_in * fd * h * w * sizeof(float));
    std::memcpy(rp + b * h * w, s.drivable.data(), h * w * sizeof(float));
    for (std::size_t t = 0; t < t_out; ++t) {
      gp[(b * t_out + t) * 2] = s.gt[t].x;
      gp[(b * t_out + t) * 2 + 1] = s.gt[t].y;
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Model plumbing.

ModelBundle build_model(const RunConfig& cfg) {
  ModelBundle mb;
  Rng rng = derived_rng(cfg.seed, kParamSalt);
  mb.model = std::make_unique<Model>(cfg.model(), mb.ps, rng);
  return mb;
}

ModelBundle restore_model(const RunConfig& cfg, const Checkpoint& ckpt) {
  const std::string hash = config_hash(cfg);
  if (ckpt.config_hash != hash)
    throw ConfigError("checkpoint was trained under config " + ckpt.config_hash +
                      " but the current config hashes to " + hash +
                      "; refusing to mix them");
  ModelBundle mb;
  for (const auto& [name, t] : ckpt.params) mb.ps.put(name, t);
  Rng rng = derived_rng(cfg.seed, kParamSalt);
  mb.model = std::make_unique<Model>(cfg.model(), mb.ps, rng);
  if (mb.ps.size() != ckpt.params.size())
    throw ShapeError("checkpoint parameters do not cover the configured model");
  return mb;
}

TrajectoryPrediction predict(const Model& model, const Batch& batch) {
  return model.forward(nullptr, batch.statics, batch.dynamics);
}

// ---------------------------------------------------------------------------
// Evaluation.

std::vector<MetricRecord> evaluate_model(const Model& model, const LoadedDataset& data,
                                         std::size_t batch_size, double resolution,
                                         const std::string& hash) {
  const std::size_t n = data.samples.size();
  const std::size_t modes = model.config().modes;
  const std::size_t k_top = std::min<std::size_t>(5, modes);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  double ade = 0, fde = 0, mr = 0, off = 0;
  for (std::size_t at = 0; at < n; at += batch_size) {
    const std::size_t bs = std::min(batch_size, n - at);
    Batch batch = make_batch(data, order, at, bs, false, nullptr);
    TrajectoryPrediction pred = predict(model, batch);
    const double wgt = static_cast<double>(bs);
    ade += wgt * min_ade_k(pred.mu, pred.pi, batch.gt, k_top, resolution);
    fde += wgt * min_fde_k(pred.mu, pred.pi, batch.gt, 1, resolution);
    mr += wgt * miss_rate_k(pred.mu, pred.pi, batch.gt, k_top, resolution);
    off += wgt * offroad_rate(pred.mu, batch.drivable);
  }
  const auto dn = static_cast<double>(n);
  return {
      MetricRecord{"min_ade", k_top, ade / dn, n, hash},
      MetricRecord{"min_fde", 1, fde / dn, n, hash},
      MetricRecord{"miss_rate", k_top, mr / dn, n, hash},
      MetricRecord{"offroad_rate", modes, off / dn, n, hash},
  };
}

std::vector<MetricRecord> cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                                   const std::string& manifest_path,
                                   const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  ModelBundle mb = restore_model(cfg, ckpt);  // hash check happens first
  LoadedDataset data = load_dataset(manifest_path);
  check_grid(data.grid, cfg.grid, "eval dataset");
  auto records =
      evaluate_model(*mb.model, data, cfg.batch_size, cfg.grid.resolution, ckpt.config_hash);
  if (!out_path.empty()) {
    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + out_path + " for writing");
    for (const auto& r : records) out << format_metric_record(r) << "\n";
  }
  return records;
}

// ---------------------------------------------------------------------------
// Training.

TrainResult cmd_train(const RunConfig& cfg, const std::string& out_dir,
                      const std::string& resume_path) {
  if (cfg.manifest.empty()) throw UsageError("training needs a dataset manifest");
  LoadedDataset data = load_dataset(cfg.manifest);
  check_grid(data.grid, cfg.grid, "training dataset");
  LoadedDataset eval_data;
  if (!cfg.eval_manifest.empty()) {
    eval_data = load_dataset(cfg.eval_manifest);
    check_grid(eval_data.grid, cfg.grid, "held-out dataset");
  }

  fs::create_directories(out_dir);
  const std::string hash = config_hash(cfg);

  ModelBundle mb;
  Rng master(cfg.seed);
  std::uint64_t global_step = 0;
  std::size_t start_epoch = 0;
  std::unique_ptr<AdamW> opt;
  if (resume_path.empty()) {
    mb = build_model(cfg);
    opt = std::make_unique<AdamW>(mb.ps, cfg.optim);
  } else {
    Checkpoint ckpt = load_checkpoint(resume_path);
    mb = restore_model(cfg, ckpt);
    opt = std::make_unique<AdamW>(mb.ps, cfg.optim);
    opt->load_moments(ckpt);
    master.load_state(ckpt.rng_state);
    global_step = ckpt.step;
    start_epoch = ckpt.epoch;
    if (start_epoch > cfg.epochs)
      throw UsageError("checkpoint is past the configured epoch count");
  }

  std::ofstream loss_log(out_dir + "/loss.log", std::ios::trunc);
  std::ofstream timing_log(out_dir + "/timing.log", std::ios::trunc);
  std::ofstream metrics_log(out_dir + "/metrics.log", std::ios::trunc);
  if (!loss_log || !timing_log || !metrics_log)
    throw IoError("cannot open logs under " + out_dir);

  auto save = [&](std::size_t epochs_done, const std::string& path) {
    Checkpoint ckpt;
    ckpt.config_hash = hash;
    ckpt.step = opt->steps();
    ckpt.epoch = epochs_done;
    ckpt.rng_state = master.save_state();
    ckpt.params = mb.ps.items();
    for (std::size_t i = 0; i < mb.ps.size(); ++i) {
      ckpt.moment1.emplace_back(mb.ps.items()[i].first, opt->moment1()[i]);
      ckpt.moment2.emplace_back(mb.ps.items()[i].first, opt->moment2()[i]);
    }
    save_checkpoint(ckpt, path);
  };

  TrainResult result;
  const std::size_t n = data.samples.size();
  std::vector<std::size_t> order(n);
  double wall_total = 0;
  std::size_t epochs_run = 0;

  for (std::size_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[master.uniform_int(i)]);

    double loss_sum = 0;
    std::size_t steps_here = 0;
    for (std::size_t at = 0; at < n; at += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, n - at);
      const std::uint64_t batch_seed = hash_mix(cfg.seed, global_step + 1);
      Batch batch = make_batch(data, order, at, bs, cfg.augment, &master);

      Tape<float> tape;
      TrajectoryPrediction pred = mb.model->forward(&tape, batch.statics, batch.dynamics);
      Tensor loss = total_loss(pred, batch.gt);
      const double lv = loss.data()[0];
      if (!std::isfinite(lv)) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "non-finite loss at epoch %zu step %llu (batch_seed=%016llx)", epoch + 1,
                      (unsigned long long)(global_step + 1), (unsigned long long)batch_seed);
        loss_log << msg << "\n";
        throw DomainError(msg);
      }
      Gradients<float> grads = tape.backward(loss);
      opt->step(tape, grads);
      ++global_step;
      ++steps_here;
      loss_sum += lv;
      loss_log << "step=" << global_step << " epoch=" << epoch + 1 << " batch_seed=" << std::hex
               << batch_seed << std::dec << " loss=" << fmt_loss(lv) << "\n";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    wall_total += secs;
    ++epochs_run;
    const double mean_loss = loss_sum / static_cast<double>(steps_here);
    result.epoch_mean_loss.push_back(mean_loss);
    loss_log << "epoch=" << epoch + 1 << " mean_loss=" << fmt_loss(mean_loss) << "\n";
    {
      char line[64];
      std::snprintf(line, sizeof(line), "epoch=%zu wall_s=%.3f", epoch + 1, secs);
      timing_log << line << "\n";
    }
    loss_log.flush();

    const bool final_epoch = epoch + 1 == cfg.epochs;
    if (!eval_data.samples.empty() &&
        (final_epoch || (cfg.snapshot_every && (epoch + 1) % cfg.snapshot_every == 0))) {
      auto records =
          evaluate_model(*mb.model, eval_data, cfg.batch_size, cfg.grid.resolution, hash);
      for (const auto& r : records)
        metrics_log << "epoch=" << epoch + 1 << " " << format_metric_record(r) << "\n";
      metrics_log.flush();
    }
    if (!final_epoch && cfg.checkpoint_every && (epoch + 1) % cfg.checkpoint_every == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "checkpoint_epoch_%04zu.ckpt", epoch + 1);
      save(epoch + 1, out_dir + "/" + name);
    }
    if (final_epoch) {
      result.checkpoint_path = out_dir + "/checkpoint_final.ckpt";
      save(epoch + 1, result.checkpoint_path);
    }
  }

  if (result.checkpoint_path.empty()) {  // nothing left to train
    result.checkpoint_path = out_dir + "/checkpoint_final.ckpt";
    save(cfg.epochs, result.checkpoint_path);
  }
  result.steps = global_step;
  result.avg_epoch_seconds = epochs_run ? wall_total / static_cast<double>(epochs_run) : 0.0;
  {
    char line[64];
    std::snprintf(line, sizeof(line), "avg_epoch_s=%.3f", result.avg_epoch_seconds);
    timing_log << line << "\n";
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ablation matrix.

std::vector<AblateRow> cmd_ablate(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.manifest.empty() || cfg.eval_manifest.empty())
    throw UsageError("ablation needs both train and eval manifests");
  fs::create_directories(out_dir);
  std::vector<AblateRow> rows;
  for (const std::string& name : ablation_names()) {
    AblateRow row;
    row.variant = name;
    try {
      RunConfig vc = cfg;
      vc.variant = name;
      TrainResult tr = cmd_train(vc, out_dir + "/" + name);
      row.metrics = cmd_eval(vc, tr.checkpoint_path, vc.eval_manifest,
                             out_dir + "/" + name + "/report.txt");
      row.avg_epoch_seconds = tr.avg_epoch_seconds;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::ofstream report(out_dir + "/ablate_report.txt", std::ios::trunc);
  if (!report) throw IoError("cannot open ablation report under " + out_dir);
  for (const auto& row : rows) {
    char line[128];
    if (row.ok) {
      std::snprintf(line, sizeof(line), "variant=%s status=ok avg_epoch_s=%.3f",
                    row.variant.c_str(), row.avg_epoch_seconds);
      report << line << "\n";
      for (const auto& r : row.metrics)
        report << "variant=" << row.variant << " " << format_metric_record(r) << "\n";
    } else {
      report << "variant=" << row.variant << " status=failed error=" << row.error << "\n";
    }
  }
  return rows;
}

}  // namespace casp
