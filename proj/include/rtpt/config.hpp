#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "rtpt/attack.hpp"
#include "rtpt/backend_dense.hpp"
#include "rtpt/dataset.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/inference.hpp"
#include "rtpt/serialize.hpp"

namespace rtpt {

/// Backend selection. "toy" builds a seeded DenseBackend; any other key is
/// resolved to a checkpoint file (explicit path, or
/// $RTPT_CHECKPOINT_ROOT/<name>.rtpt).
struct BackendSettings {
  std::string name = "toy";
  DenseBackendConfig toy;
  std::string checkpoint_path;
};

struct DatasetSettings {
  std::string name = "toy";  // "toy" or "folder"
  ToyDatasetConfig toy;
  std::string root;  // folder datasets only
};

struct RunConfig {
  BackendSettings backend;
  DatasetSettings dataset;
  MethodConfig method;
  AttackSpec attack;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = "runs/latest";
  std::string cache_dir = "caches";

  /// Canonical experiment presets: the attack configuration and view count
  /// used with each base model family.
  static RunConfig preset(const std::string& name) {
    RunConfig cfg;
    if (name == "paper-rn50" || name == "paper-vit") {
      cfg.attack = AttackSpec::preset(name);
      cfg.method.augment.n_views = 63;
      cfg.method.optimizer.lr = 0.005;
      cfg.method.tune_steps = 1;
    } else if (name == "toy-benchmark") {
      cfg.attack = AttackSpec::preset("paper-rn50");
    } else {
      throw ConfigError("unknown preset: " + name);
    }
    return cfg;
  }
};

inline void to_json(json& j, const BackendSettings& s) {
  j = json{{"name", s.name}, {"toy", s.toy}, {"checkpoint_path", s.checkpoint_path}};
}
inline void from_json(const json& j, BackendSettings& s) {
  s.name = j.value("name", s.name);
  if (j.contains("toy")) j.at("toy").get_to(s.toy);
  s.checkpoint_path = j.value("checkpoint_path", s.checkpoint_path);
}

inline void to_json(json& j, const DatasetSettings& s) {
  j = json{{"name", s.name}, {"toy", s.toy}, {"root", s.root}};
}
inline void from_json(const json& j, DatasetSettings& s) {
  s.name = j.value("name", s.name);
  if (j.contains("toy")) j.at("toy").get_to(s.toy);
  s.root = j.value("root", s.root);
}

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"backend", c.backend}, {"dataset", c.dataset}, {"method", c.method},
           {"attack", c.attack},   {"seed", c.seed},       {"workers", c.workers},
           {"out_dir", c.out_dir}, {"cache_dir", c.cache_dir}};
}
inline void from_json(const json& j, RunConfig& c) {
  if (j.contains("backend")) j.at("backend").get_to(c.backend);
  if (j.contains("dataset")) j.at("dataset").get_to(c.dataset);
  if (j.contains("method")) j.at("method").get_to(c.method);
  if (j.contains("attack")) j.at("attack").get_to(c.attack);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.cache_dir = j.value("cache_dir", c.cache_dir);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in).get<RunConfig>();
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file " + path + ": " + e.what());
  }
}

inline void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write config file: " + path);
  out << json(cfg).dump(2) << "\n";
}

/// Hash of the fully resolved configuration, recorded in every eval record
/// so a result line can be traced back to the exact settings that made it.
inline std::string config_hash(const RunConfig& cfg) {
  return to_hex(fnv1a64(json(cfg).dump()));
}

/// Backend registry. Checkpoint-backed names need either an explicit path or
/// the RTPT_CHECKPOINT_ROOT environment variable.
inline BackendPtr make_backend(const BackendSettings& settings) {
  if (settings.name == "toy") {
    return make_toy_backend(settings.toy);
  }
  std::string path = settings.checkpoint_path;
  if (path.empty()) {
    const char* root = std::getenv("RTPT_CHECKPOINT_ROOT");
    if (root == nullptr) {
      throw ConfigError("backend '" + settings.name +
                        "' needs checkpoint_path or RTPT_CHECKPOINT_ROOT");
    }
    path = (std::filesystem::path(root) / (settings.name + ".rtpt")).string();
  }
  auto backend = DenseBackend::load_checkpoint(path);
  if (backend->info().name != settings.name) {
    throw ConfigError("checkpoint at " + path + " was exported for backend '" +
                      backend->info().name + "', not '" + settings.name + "'");
  }
  return backend;
}

inline Dataset make_dataset(const DatasetSettings& settings, const EncoderBackend& backend) {
  if (settings.name == "toy") {
    return make_toy_dataset(settings.toy, backend);
  }
  if (settings.name == "folder") {
    std::string root = settings.root;
    if (root.empty()) {
      const char* env = std::getenv("RTPT_DATASET_ROOT");
      if (env == nullptr) {
        throw ConfigError("folder dataset needs root or RTPT_DATASET_ROOT");
      }
      root = env;
    }
    return load_folder_dataset(root, backend.info().input_shape);
  }
  throw ConfigError("unknown dataset kind: " + settings.name);
}

}  // namespace rtpt
