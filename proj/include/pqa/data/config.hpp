#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pqa/aps/sampler.hpp"
#include "pqa/data/synth.hpp"
#include "pqa/model/model.hpp"

namespace pqa::data {

// Flat "section.key" -> value map; the on-disk form groups keys by section.
using KvMap = std::map<std::string, std::string>;

struct TrainConfig {
  double lr = 1e-4;
  int64_t batch_size = 8;
  int64_t epochs = 25;
  double train_fraction = 0.8;
  uint64_t seed = 1;
};

struct LossConfig {
  int gamma = 1;
  double omega = 2.0;
  double epsilon = 1e-8;
};

// Everything a run needs. sampler.k and sampler.network_side mirror the
// model fields and are kept in sync by from_kv/normalize.
struct AppConfig {
  model::ModelConfig model;
  aps::SamplerConfig sampler;
  TrainConfig train;
  LossConfig loss;
  SynthConfig synth;
  uint64_t eval_seed = 777;

  void sync() {
    sampler.k = model.k_patches;
    sampler.network_side = model.network_side;
  }
};

KvMap parse_config_text(const std::string& text);
KvMap load_config_file(const std::string& path);

// Canonical rendering: sections and keys sorted, `key = value` lines.
std::string render_config(const KvMap& kv);
void save_config_file(const std::string& path, const KvMap& kv);

// FNV-1a over the canonical rendering.
uint64_t config_hash(const KvMap& kv);
uint64_t fnv1a(const void* data, size_t n, uint64_t seed = 14695981039346656037ull);

KvMap to_kv(const AppConfig& cfg);

// Applies kv on top of defaults; throws std::invalid_argument listing any
// unknown keys or unparseable values.
AppConfig app_config_from_kv(const KvMap& kv);

}  // namespace pqa::data
