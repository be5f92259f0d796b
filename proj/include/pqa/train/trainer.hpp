#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqa/aps/sampler.hpp"
#include "pqa/data/checkpoint.hpp"
#include "pqa/data/config.hpp"
#include "pqa/data/manifest.hpp"
#include "pqa/model/model.hpp"
#include "pqa/stats/stats.hpp"

namespace pqa::train {

// Raised when the loss goes non-finite; the message carries epoch, batch,
// and parameter norms so the failure is diagnosable from logs alone.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  int64_t epoch = 0;
  double loss = 0.0;
  double srcc = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  data::Checkpoint checkpoint;
  std::string history_path;
  std::string checkpoint_path;
};

struct EvalItem {
  std::string image_id;
  double mos = 0.0;
  double raw_score = 0.0;
  double mapped_score = 0.0;
  std::string error;  // empty when scored
};

struct EvalReport {
  std::vector<EvalItem> items;
  stats::LogisticParams rho;
  bool fit_converged = true;
  double plcc = 0.0;
  double srcc = 0.0;
  double rmse = 0.0;
  int64_t n_scored = 0;
  int64_t n_failed = 0;
  std::string config_hash_hex;
  std::string checkpoint_id;
};

// Seed for one (run, epoch, image) sampling stream; epoch 0 is evaluation.
uint64_t per_image_seed(uint64_t global_seed, int64_t epoch, const std::string& image_id);

// Stacks a sampled patch set into the [K, C, side, side] network input.
Tensor<float> stack_patches(const aps::PatchSet& ps);

data::Checkpoint make_checkpoint(const model::Model<float>& m, const data::AppConfig& cfg,
                                 uint64_t rng_state, int64_t epoch);
void load_into_model(model::Model<float>& m, const data::Checkpoint& ck);

// Full training loop over the manifest's train split: per epoch, shuffled
// mini-batches, fresh per-(epoch, image) patch seeds, norm-in-norm loss over
// the batch, Adam step on trainable parameters. Writes history.csv and
// checkpoint.ckpt under out_dir and returns both.
TrainResult train_run(const data::DatasetManifest& manifest, const data::AppConfig& cfg,
                      const std::string& out_dir, std::ostream* log = nullptr);

// Scores one split with a fixed evaluation seed, fits the logistic map on
// (raw, MOS), and reports PLCC/RMSE on mapped plus SRCC on raw scores.
// Unreadable images become per-item error entries; metrics use the rest.
EvalReport evaluate_run(const data::Checkpoint& ck, const data::DatasetManifest& manifest,
                        data::Split split, std::ostream* log = nullptr);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);
void write_report_csv(const std::string& path, const EvalReport& report);
void write_summary_json(const std::string& path, const EvalReport& report);

}  // namespace pqa::train
