#pragma once

#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rtpt/attack_cache.hpp"
#include "rtpt/dataset.hpp"
#include "rtpt/inference.hpp"
#include "rtpt/parallel.hpp"
#include "rtpt/serialize.hpp"

namespace rtpt {

/// One evaluation condition: the clean images or a named attack cache.
struct EvalCondition {
  std::string name;  // "clean" or "<family>-<hash12>"
  bool clean = true;
  AttackSpec spec;   // only meaningful when clean == false

  static EvalCondition make_clean() { return {"clean", true, {}}; }
  static EvalCondition make_attack(const AttackSpec& spec, const Dataset& dataset,
                                   const std::string& backend) {
    const AttackCacheKey key = AttackCacheKey::make(dataset, backend, spec);
    return {std::string(family_name(spec.family)) + "-" + key.hash_hex().substr(0, 12),
            false, spec};
  }
};

struct EvalRecord {
  std::string dataset;
  std::string method;
  std::string condition;
  std::string sample_id;
  int predicted = -1;
  int label = -1;
  bool correct = false;
  std::uint64_t seed = 0;
  std::string config_hash;
  double wall_ms = 0.0;
  std::vector<double> objective_trace;  // present only when trace logging is on
};

inline void to_json(json& j, const EvalRecord& r) {
  j = json{{"dataset", r.dataset},     {"method", r.method},
           {"condition", r.condition}, {"sample_id", r.sample_id},
           {"predicted", r.predicted}, {"label", r.label},
           {"correct", r.correct},     {"seed", r.seed},
           {"config_hash", r.config_hash}, {"wall_ms", r.wall_ms}};
  if (!r.objective_trace.empty()) j["objective_trace"] = r.objective_trace;
}
inline void from_json(const json& j, EvalRecord& r) {
  j.at("dataset").get_to(r.dataset);
  j.at("method").get_to(r.method);
  j.at("condition").get_to(r.condition);
  j.at("sample_id").get_to(r.sample_id);
  j.at("predicted").get_to(r.predicted);
  j.at("label").get_to(r.label);
  j.at("correct").get_to(r.correct);
  j.at("seed").get_to(r.seed);
  r.config_hash = j.value("config_hash", "");
  r.wall_ms = j.value("wall_ms", 0.0);
  if (j.contains("objective_trace")) j.at("objective_trace").get_to(r.objective_trace);
}

/// One canonical JSONL line (keys sorted by the json object ordering).
inline std::string record_to_line(const EvalRecord& r) {
  return json(r).dump();
}

inline std::vector<EvalRecord> read_record_file(const std::string& path) {
  std::vector<EvalRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line).get<EvalRecord>());
    } catch (const json::exception& e) {
      throw IntegrityError("malformed record at " + path + ":" + std::to_string(lineno) +
                           ": " + e.what());
    }
  }
  return records;
}

struct RunOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  bool resume = true;
  std::string record_file;  // empty -> records are not persisted
  std::string config_hash;
  bool log_objective_trace = false;  // adds per-sample tuning losses to records
};

/// Evaluates every (method, condition, sample) cell. Records are emitted in
/// canonical order (method-major, then condition, then sample index) no
/// matter how many workers run or how the dataset is permuted internally;
/// per-sample seeds depend only on the global seed and a stable per-sample
/// index, so outcomes are identical across schedules. With resume enabled,
/// cells already present in the record file are not recomputed.
inline std::vector<EvalRecord> run_eval(const EncoderBackend& backend, const Dataset& dataset,
                                        const std::vector<MethodConfig>& methods,
                                        const std::vector<EvalCondition>& conditions,
                                        const std::string& cache_root,
                                        const RunOptions& opts) {
  // Stable per-sample indices: position of the id in the sorted id list, so
  // a permuted dataset still maps each sample to the same seed.
  std::vector<std::string> sorted_ids;
  sorted_ids.reserve(dataset.size());
  for (const auto& s : dataset.samples) sorted_ids.push_back(s.id);
  std::sort(sorted_ids.begin(), sorted_ids.end());
  std::map<std::string, std::size_t> stable_index;
  for (std::size_t i = 0; i < sorted_ids.size(); ++i) stable_index[sorted_ids[i]] = i;

  // Load attack caches up front; a missing cache is a hard error that names
  // the expected key.
  std::map<std::string, AttackCache> caches;
  for (const auto& cond : conditions) {
    if (cond.clean) continue;
    const AttackCacheKey key = AttackCacheKey::make(dataset, backend.info().name, cond.spec);
    if (!attack_cache_exists(cache_root, key)) {
      throw InputError("missing attack cache " + key.hash_hex() + " (condition " +
                       cond.name + "); generate it with the attack command first");
    }
    caches.emplace(cond.name, load_attack_cache(cache_root, key));
  }

  std::set<std::tuple<std::string, std::string, std::string>> done;
  std::vector<EvalRecord> resumed;
  if (opts.resume && !opts.record_file.empty()) {
    resumed = read_record_file(opts.record_file);
    for (const auto& r : resumed) done.insert({r.method, r.condition, r.sample_id});
  }

  struct Task {
    std::size_t method_idx, cond_idx, sample_idx;
  };
  std::vector<Task> tasks;
  // Sample order within the canonical stream follows sorted ids, so two runs
  // over permuted copies of the same dataset produce identical files.
  std::map<std::string, std::size_t> position_of;
  for (std::size_t i = 0; i < dataset.size(); ++i) position_of[dataset.samples[i].id] = i;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      for (const auto& id : sorted_ids) {
        const std::size_t s = position_of.at(id);
        if (done.count({methods[m].name(), conditions[c].name, dataset.samples[s].id})) {
          continue;
        }
        tasks.push_back({m, c, s});
      }
    }
  }

  std::vector<std::optional<EvalRecord>> results(tasks.size());
  std::ofstream out;
  if (!opts.record_file.empty()) {
    out.open(opts.record_file, std::ios::app);
    if (!out) throw InputError("cannot open record file: " + opts.record_file);
  }
  std::mutex write_mutex;
  std::size_t next_to_write = 0;

  parallel_for(tasks.size(), opts.workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const MethodConfig& cfg = methods[task.method_idx];
    const EvalCondition& cond = conditions[task.cond_idx];
    const Sample& sample = dataset.samples[task.sample_idx];
    const Image* image = &sample.image;
    if (!cond.clean) image = &caches.at(cond.name).for_sample(sample.id).image;

    const std::uint64_t seed = sample_seed(opts.seed, stable_index.at(sample.id));
    InferenceOutcome outcome =
        run_inference(backend, dataset.class_names, *image, cfg, seed, sample.id);

    EvalRecord rec;
    rec.dataset = dataset.name;
    rec.method = cfg.name();
    rec.condition = cond.name;
    rec.sample_id = sample.id;
    rec.predicted = outcome.predicted_class;
    rec.label = sample.label;
    rec.correct = outcome.predicted_class == sample.label;
    rec.seed = seed;
    rec.config_hash = opts.config_hash;
    rec.wall_ms = outcome.wall_time_ms;
    if (opts.log_objective_trace) rec.objective_trace = outcome.objective_trace;

    std::lock_guard<std::mutex> lock(write_mutex);
    results[t] = std::move(rec);
    while (next_to_write < results.size() && results[next_to_write].has_value()) {
      if (out.is_open()) {
        out << record_to_line(*results[next_to_write]) << "\n";
        out.flush();
      }
      ++next_to_write;
    }
  });

  std::vector<EvalRecord> all = std::move(resumed);
  for (auto& r : results) all.push_back(std::move(*r));
  return all;
}

}  // namespace rtpt
