#pragma once

#include <filesystem>
#include <memory>
#include <set>

#include <json.hpp>

#include "styleblend/adam.hpp"
#include "styleblend/checkpoint.hpp"
#include "styleblend/losses.hpp"
#include "styleblend/model.hpp"

namespace styleblend {

struct TrainConfig {
  int64_t total_steps = 300;
  int64_t batch_size = 8;
  double lr = 1e-4;
  /// P_pi stays 1 for this many steps, then falls linearly to 0 over
  /// curriculum_decay_steps.
  int64_t curriculum_warm_steps = 1000;
  int64_t curriculum_decay_steps = 2000;
  /// First step of the decoder fine-tuning phase.
  int64_t phase2_start = 5000;
  double phase2_lr_scale = 0.1;
  bool swap_loss_detach = false;
  /// Fraction of each batch that also runs the two extra dual-swap passes.
  double swap_fraction = 0.25;
  int64_t metrics_every = 1;
  /// 0 disables periodic checkpoints (a final one is still written).
  int64_t checkpoint_every = 0;
  LossWeights weights;

  static TrainConfig desk_scale() { return {}; }
  /// lr 4e-5, batch 32.
  static TrainConfig full_scale();
  void validate() const;
};

/// Probability that a sample is forced to source == target.
double curriculum_p(int64_t step, const TrainConfig& cfg);

TrainPhase phase_at(int64_t step, const TrainConfig& cfg);

/// Phase 1: {encoder, sbm, critic}; phase 2: {decoder, critic}. The
/// extractors are never trainable.
std::set<ParamGroup> phase_mask(int64_t step, const TrainConfig& cfg);

struct Batch {
  torch::Tensor source;  // (N, 3, H, W)
  torch::Tensor target;  // (N, 3, H, W)
};

struct StepResult {
  LossReport report;
  double p_pi = 0;
  int64_t same_input_count = 0;
};

/// One metrics.jsonl record.
nlohmann::json metrics_record(int64_t step, const StepResult& r);

/// Owns the model, both optimizers and the step counter. Every random draw
/// of step k comes from streams labelled with k, so a run resumed from a
/// checkpoint replays exactly what an uninterrupted run would do.
class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainConfig& train_cfg);

  FaceSwapModel& model() { return *model_; }
  const TrainConfig& train_config() const { return tcfg_; }
  int64_t step() const { return step_; }

  /// Draws a batch for the current step from `images` (M, 3, H, W).
  Batch sample_batch(const torch::Tensor& images) const;

  /// Runs one generator update then one critic update. Throws NonFiniteLoss
  /// (naming the term and step) before touching any parameter.
  StepResult train_step(const Batch& batch);

  /// Trains until step() == until_step, appending to out_dir/metrics.jsonl
  /// and writing ckpt_<step>.sbld every checkpoint_every steps.
  void run(const torch::Tensor& images, int64_t until_step, const std::filesystem::path& out_dir);

  TensorList checkpoint_tensors() const;
  void save(const std::filesystem::path& path) const;
  /// Restores parameters, optimizer state and the step counter.
  void resume(const Checkpoint& ckpt);

 private:
  ModelConfig mcfg_;
  TrainConfig tcfg_;
  std::unique_ptr<FaceSwapModel> model_;
  std::unique_ptr<Adam> gen_opt_;
  std::unique_ptr<Adam> critic_opt_;
  int64_t step_ = 0;
};

}  // namespace styleblend
