#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pqa/core/tensor.hpp"

namespace pqa::data {

// Versioned binary container for trained weights plus everything needed to
// resume or audit a run. Tensor order is preserved, so save -> load -> save
// is byte-stable.
struct Checkpoint {
  uint32_t version = 1;
  std::map<std::string, std::string> config_kv;
  uint64_t rng_state = 0;
  int64_t epoch = 0;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Short content id: FNV-1a over the parameter payload, hex.
std::string checkpoint_id(const Checkpoint& ck);

}  // namespace pqa::data
