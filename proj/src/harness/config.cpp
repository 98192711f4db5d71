// Copyright (c) 2026 The casp authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "casp/harness.hpp"
#include "json.hpp"

namespace casp {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.grid = grid;
  m.d = d;
  m.levels = levels;
  m.heads = heads;
  m.points = points;
  m.attn_layers = attn_layers;
  m.modes = modes;
  m.r_steps = r_steps;
  m.flags = ablation_variant(variant);
  return m;
}

RunConfig preset_config(const std::string& preset) {
  RunConfig cfg;
  cfg.preset = preset;
  if (preset == "desk") {
    cfg.grid = desk_grid();
  } else if (preset == "paper") {
    cfg.grid = paper_grid();
    cfg.d = 64;
    cfg.attn_layers = 4;
    cfg.batch_size = 64;
    cfg.train_samples = 1000;
    cfg.eval_samples = 200;
    cfg.epochs = 50;
  } else {
    throw ConfigError("unknown preset '" + preset + "' (desk, paper)");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path, const std::string& preset_override) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");

  static const std::set<std::string> known = {
      "preset",      "d",           "levels",        "heads",
      "points",      "attn_layers", "modes",         "r_steps",
      "lr",          "beta1",       "beta2",         "weight_decay",
      "batch_size",  "epochs",      "seed",          "variant",
      "manifest",    "eval_manifest", "augment",     "snapshot_every",
      "checkpoint_every", "train_samples", "eval_samples", "mix"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError(path + ": unknown config key '" + key + "'");

  std::string preset = preset_override.empty() ? j.value("preset", std::string("desk"))
                                               : preset_override;
  RunConfig cfg = preset_config(preset);
  try {
    cfg.d = j.value("d", cfg.d);
    cfg.levels = j.value("levels", cfg.levels);
    cfg.heads = j.value("heads", cfg.heads);
    cfg.points = j.value("points", cfg.points);
    cfg.attn_layers = j.value("attn_layers", cfg.attn_layers);
    cfg.modes = j.value("modes", cfg.modes);
    cfg.r_steps = j.value("r_steps", cfg.r_steps);
    cfg.optim.lr = j.value("lr", cfg.optim.lr);
    cfg.optim.beta1 = j.value("beta1", cfg.optim.beta1);
    cfg.optim.beta2 = j.value("beta2", cfg.optim.beta2);
    cfg.optim.weight_decay = j.value("weight_decay", cfg.optim.weight_decay);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.variant = j.value("variant", cfg.variant);
    cfg.manifest = j.value("manifest", cfg.manifest);
    cfg.eval_manifest = j.value("eval_manifest", cfg.eval_manifest);
    cfg.augment = j.value("augment", cfg.augment);
    cfg.snapshot_every = j.value("snapshot_every", cfg.snapshot_every);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.train_samples = j.value("train_samples", cfg.train_samples);
    cfg.eval_samples = j.value("eval_samples", cfg.eval_samples);
    if (j.contains("mix")) {
      const auto& m = j.at("mix");
      static const std::set<std::string> kinds = {"straight", "curve", "t_junction", "fork"};
      for (const auto& [key, value] : m.items())
        if (!kinds.count(key)) throw ConfigError(path + ": unknown mix key '" + key + "'");
      cfg.mix.straight = m.value("straight", 0.0);
      cfg.mix.curve = m.value("curve", 0.0);
      cfg.mix.t_junction = m.value("t_junction", 0.0);
      cfg.mix.fork = m.value("fork", 0.0);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
  const double mix_sum = cfg.mix.straight + cfg.mix.curve + cfg.mix.t_junction + cfg.mix.fork;
  if (cfg.mix.straight < 0 || cfg.mix.curve < 0 || cfg.mix.t_junction < 0 || cfg.mix.fork < 0 ||
      mix_sum <= 0)
    throw ConfigError("mix fractions must be nonnegative and sum above zero");
  ablation_variant(cfg.variant);  // rejects unknown variants
  return cfg;
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream os;
  os << "preset=" << c.preset << "\n";
  os << "grid.h=" << c.grid.h << "\n";
  os << "grid.w=" << c.grid.w << "\n";
  os << "grid.resolution=" << fmt_double(c.grid.resolution) << "\n";
  os << "grid.ego_row=" << c.grid.ego_row << "\n";
  os << "grid.ego_col=" << c.grid.ego_col << "\n";
  os << "grid.t_in=" << c.grid.t_in << "\n";
  os << "grid.t_out=" << c.grid.t_out << "\n";
  os << "d=" << c.d << "\n";
  os << "levels=" << c.levels << "\n";
  os << "heads=" << c.heads << "\n";
  os << "points=" << c.points << "\n";
  os << "attn_layers=" << c.attn_layers << "\n";
  os << "modes=" << c.modes << "\n";
  os << "r_steps=" << c.r_steps << "\n";
  os << "lr=" << fmt_double(c.optim.lr) << "\n";
  os << "beta1=" << fmt_double(c.optim.beta1) << "\n";
  os << "beta2=" << fmt_double(c.optim.beta2) << "\n";
  os << "weight_decay=" << fmt_double(c.optim.weight_decay) << "\n";
  os << "batch_size=" << c.batch_size << "\n";
  os << "epochs=" << c.epochs << "\n";
  os << "seed=" << c.seed << "\n";
  os << "variant=" << c.variant << "\n";
  os << "augment=" << (c.augment ? 1 : 0) << "\n";
  os << "train_samples=" << c.train_samples << "\n";
  os << "eval_samples=" << c.eval_samples << "\n";
  os << "mix.straight=" << fmt_double(c.mix.straight) << "\n";
  os << "mix.curve=" << fmt_double(c.mix.curve) << "\n";
  os << "mix.t_junction=" << fmt_double(c.mix.t_junction) << "\n";
  os << "mix.fork=" << fmt_double(c.mix.fork) << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)fnv1a64(canonical_config(cfg)));
  return buf;
}

}  // namespace casp
