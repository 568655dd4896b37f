#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rtpt/attack.hpp"
#include "rtpt/dataset.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/parallel.hpp"
#include "rtpt/rng.hpp"
#include "rtpt/serialize.hpp"

namespace rtpt {

/// Identity of one cache: dataset (name plus content fingerprint), backend,
/// and the full attack spec.
struct AttackCacheKey {
  std::string dataset;
  std::string dataset_fingerprint;
  std::string backend;
  AttackSpec spec;

  static AttackCacheKey make(const Dataset& ds, const std::string& backend_name,
                             const AttackSpec& spec) {
    return {ds.name, ds.fingerprint(), backend_name, spec};
  }

  /// Stable hash over the canonical JSON form of the key.
  std::string hash_hex() const {
    json j;
    j["dataset"] = dataset;
    j["dataset_fingerprint"] = dataset_fingerprint;
    j["backend"] = backend;
    j["spec"] = spec;
    return to_hex(fnv1a64(j.dump()));
  }

  std::string dir_name() const {
    return dataset + "__" + family_name(spec.family) + "__" + hash_hex().substr(0, 12);
  }
};

struct AttackCache {
  AttackCacheKey key;
  std::string dir;
  std::vector<AdversarialRecord> records;
  bool reused = false;  // true when an existing cache was verified and loaded

  const AdversarialRecord& for_sample(const std::string& sample_id) const {
    for (const auto& r : records) {
      if (r.sample_id == sample_id) return r;
    }
    throw InputError("no cached adversarial example for sample " + sample_id);
  }
};

namespace detail {

constexpr const char* kTensorMagic = "RTPTADV1";

inline void write_tensors(const std::string& path, const std::vector<AdversarialRecord>& recs,
                          const ImageShape& shape) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open cache tensor file for writing: " + path);
  out.write(kTensorMagic, 8);
  const std::uint32_t header[4] = {static_cast<std::uint32_t>(recs.size()),
                                   static_cast<std::uint32_t>(shape.channels),
                                   static_cast<std::uint32_t>(shape.height),
                                   static_cast<std::uint32_t>(shape.width)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& r : recs) {
    out.write(reinterpret_cast<const char*>(r.image.data().data()),
              static_cast<std::streamsize>(r.image.data().size() * sizeof(double)));
  }
}

inline std::vector<Image> read_tensors(const std::string& path, std::size_t expected_n,
                                       const ImageShape& expected_shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("missing cache tensor file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != kTensorMagic) {
    throw IntegrityError("bad cache tensor magic: " + path);
  }
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  const ImageShape shape{static_cast<int>(header[1]), static_cast<int>(header[2]),
                         static_cast<int>(header[3])};
  if (header[0] != expected_n || !(shape == expected_shape)) {
    throw IntegrityError("cache tensor header does not match metadata: " + path);
  }
  std::vector<Image> images;
  images.reserve(expected_n);
  for (std::size_t i = 0; i < expected_n; ++i) {
    Image img(shape);
    in.read(reinterpret_cast<char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size() * sizeof(double)));
    if (!in) throw IntegrityError("truncated cache tensor file: " + path);
    images.push_back(std::move(img));
  }
  return images;
}

}  // namespace detail

inline bool attack_cache_exists(const std::string& root, const AttackCacheKey& key) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(root) / key.dir_name();
  return fs::exists(dir / "meta.json") && fs::exists(dir / "tensors.bin");
}

/// Loads and verifies a cache. Every image is re-hashed against the sidecar
/// checksum; the first mismatch reports the offending sample.
inline AttackCache load_attack_cache(const std::string& root, const AttackCacheKey& key) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(root) / key.dir_name();
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw InputError("missing attack cache " + key.hash_hex() + " under " + root);
  json meta = json::parse(meta_in);

  AttackCacheKey stored;
  stored.dataset = meta.at("dataset").get<std::string>();
  stored.dataset_fingerprint = meta.value("dataset_fingerprint", "");
  stored.backend = meta.at("backend").get<std::string>();
  meta.at("spec").get_to(stored.spec);
  if (stored.hash_hex() != key.hash_hex()) {
    throw IntegrityError("cache collision: stored key differs from requested key in " +
                         dir.string());
  }

  ImageShape shape;
  meta.at("shape").get_to(shape);
  const auto& entries = meta.at("samples");
  auto images = detail::read_tensors((dir / "tensors.bin").string(), entries.size(), shape);

  AttackCache cache;
  cache.key = key;
  cache.dir = dir.string();
  cache.reused = true;
  cache.records.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    AdversarialRecord rec;
    rec.sample_id = entries[i].at("id").get<std::string>();
    rec.clean_label = entries[i].at("label").get<int>();
    rec.attacker_prediction = entries[i].at("attacker_prediction").get<int>();
    rec.achieved_linf = entries[i].at("achieved_linf").get<double>();
    rec.spec = key.spec;
    rec.image = std::move(images[i]);
    rec.checksum = rec.image.checksum();
    const std::string stored_sum = entries[i].at("checksum").get<std::string>();
    if (to_hex(rec.checksum) != stored_sum) {
      throw IntegrityError("cache entry corrupted for sample " + rec.sample_id);
    }
    cache.records.push_back(std::move(rec));
  }
  return cache;
}

/// Generates one adversarial example per dataset sample against the given
/// (pre-adaptation) head and persists them. Idempotent: when a cache with
/// the same key already exists it is verified and returned untouched.
/// Per-sample seeds derive from spec.seed and the sample index, so parallel
/// generation is order-independent.
inline AttackCache generate_and_cache(const EncoderBackend& backend, const ClassHead& head,
                                      const Dataset& dataset, const AttackSpec& spec,
                                      const std::string& root, int workers = 1) {
  spec.validate();
  namespace fs = std::filesystem;
  const AttackCacheKey key = AttackCacheKey::make(dataset, backend.info().name, spec);
  if (attack_cache_exists(root, key)) {
    return load_attack_cache(root, key);
  }

  std::vector<AdversarialRecord> records(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const Sample& s = dataset.samples[i];
    AttackSpec per_sample = spec;
    per_sample.seed = sample_seed(spec.seed, i);
    records[i] = run_attack(backend, head, s.image, s.label, per_sample, s.id);
    records[i].spec = spec;  // the cache key spec, not the derived seed
  });

  const fs::path dir = fs::path(root) / key.dir_name();
  fs::create_directories(dir);
  detail::write_tensors((dir / "tensors.bin").string(), records,
                        backend.info().input_shape);

  json meta;
  meta["dataset"] = key.dataset;
  meta["dataset_fingerprint"] = key.dataset_fingerprint;
  meta["backend"] = key.backend;
  meta["spec"] = key.spec;
  meta["shape"] = backend.info().input_shape;
  json samples = json::array();
  for (const auto& r : records) {
    samples.push_back(json{{"id", r.sample_id},
                           {"label", r.clean_label},
                           {"attacker_prediction", r.attacker_prediction},
                           {"achieved_linf", r.achieved_linf},
                           {"checksum", to_hex(r.checksum)}});
  }
  meta["samples"] = std::move(samples);
  std::ofstream meta_out(dir / "meta.json");
  meta_out << meta.dump(2) << "\n";

  AttackCache cache;
  cache.key = key;
  cache.dir = dir.string();
  cache.records = std::move(records);
  cache.reused = false;
  return cache;
}

}  // namespace rtpt
