#include "styleblend/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <torch/torch.h>

namespace styleblend {

TrainConfig TrainConfig::full_scale() {
  TrainConfig c;
  c.lr = 4e-5;
  c.batch_size = 32;
  c.total_steps = 2'400'000;
  return c;
}

void TrainConfig::validate() const {
  if (total_steps < 0 || batch_size < 1 || !(lr > 0) || curriculum_warm_steps < 0 ||
      curriculum_decay_steps < 0 || phase2_start < 0 || !(phase2_lr_scale > 0) ||
      swap_fraction < 0 || swap_fraction > 1 || metrics_every < 1 || checkpoint_every < 0 ||
      !(weights.tau > 0)) {
    throw std::invalid_argument("invalid training configuration");
  }
}

double curriculum_p(int64_t step, const TrainConfig& cfg) {
  if (step < cfg.curriculum_warm_steps) return 1.0;
  const int64_t into = step - cfg.curriculum_warm_steps;
  if (into >= cfg.curriculum_decay_steps) return 0.0;
  return 1.0 - static_cast<double>(into) / static_cast<double>(cfg.curriculum_decay_steps);
}

TrainPhase phase_at(int64_t step, const TrainConfig& cfg) {
  return step < cfg.phase2_start ? TrainPhase::kEncoderBlender : TrainPhase::kDecoder;
}

std::set<ParamGroup> phase_mask(int64_t step, const TrainConfig& cfg) {
  if (phase_at(step, cfg) == TrainPhase::kEncoderBlender) {
    return {ParamGroup::kEncoder, ParamGroup::kBlender, ParamGroup::kCritic};
  }
  return {ParamGroup::kDecoder, ParamGroup::kCritic};
}

nlohmann::json metrics_record(int64_t step, const StepResult& r) {
  nlohmann::json j = r.report;
  j["step"] = step;
  j["p_pi"] = r.p_pi;
  return j;
}

Trainer::Trainer(const ModelConfig& model_cfg, const TrainConfig& train_cfg)
    : mcfg_(model_cfg), tcfg_(train_cfg) {
  tcfg_.validate();
  model_ = std::make_unique<FaceSwapModel>(mcfg_);
  TensorList gen_params;
  for (auto g : {ParamGroup::kEncoder, ParamGroup::kBlender, ParamGroup::kDecoder}) {
    auto part = model_->group_parameters(g);
    gen_params.insert(gen_params.end(), part.begin(), part.end());
  }
  gen_opt_ = std::make_unique<Adam>(std::move(gen_params));
  critic_opt_ = std::make_unique<Adam>(model_->group_parameters(ParamGroup::kCritic));
  model_->set_trainable({});
}

Batch Trainer::sample_batch(const torch::Tensor& images) const {
  auto rng = seeded_rng(mcfg_.seed, "batch/" + std::to_string(step_));
  const int64_t m = images.size(0);
  auto tgt = rng.randint(m, {tcfg_.batch_size});
  auto src = rng.randint(m, {tcfg_.batch_size});
  return {images.index_select(0, src), images.index_select(0, tgt)};
}

StepResult Trainer::train_step(const Batch& batch) {
  const int64_t k = step_;
  auto rng = seeded_rng(mcfg_.seed, "step/" + std::to_string(k));
  auto noise = seeded_rng(mcfg_.seed, "noise/" + std::to_string(k));
  auto& m = *model_;
  const auto& w = tcfg_.weights;
  const int64_t n = batch.target.size(0);

  StepResult result;
  result.p_pi = curriculum_p(k, tcfg_);
  auto same = rng.uniform({n}, torch::kFloat64) < result.p_pi;
  result.same_input_count = same.sum().item<int64_t>();
  auto target = batch.target;
  auto source = torch::where(same.view({n, 1, 1, 1}), batch.target, batch.source);

  // Generator update.
  auto groups = phase_mask(k, tcfg_);
  auto gen_groups = groups;
  gen_groups.erase(ParamGroup::kCritic);
  m.set_trainable(gen_groups);

  auto abort = [&](const std::string& term, const std::string& what) {
    return NonFiniteLoss(term, what + " at step " + std::to_string(k));
  };
  auto require_finite = [&](const char* term, const torch::Tensor& value) {
    if (!std::isfinite(value.item<double>())) {
      throw abort(term, std::string("non-finite loss term '") + term + "'");
    }
  };

  torch::Tensor fake;
  try {
    fake = m.generate(source, target, noise);
  } catch (const NonFiniteAttention& e) {
    throw abort("generator", e.what());
  }
  GeneratorTerms terms;
  terms.adv_g = adv_loss_g(m.critic->forward(fake));
  require_finite("adv_g", terms.adv_g);
  auto ids = m.id_extractor->forward(torch::cat({fake, source, target}, 0)).chunk(3, 0);
  terms.id = id_loss(ids[0], ids[1]);
  require_finite("id", terms.id);
  terms.con = contrastive_id_loss_batch(ids[0], ids[1], ids[2], w.tau,
                                        w.con_denominator_includes_positive);
  require_finite("con", terms.con);
  terms.rec = reconstruction_loss(fake, target, same);
  require_finite("rec", terms.rec);
  auto lms = m.landmark_extractor->forward(torch::cat({target, fake}, 0)).chunk(2, 0);
  terms.lm = landmark_loss(lms[0], lms[1]);
  require_finite("lm", terms.lm);
  const int64_t n_swap =
      tcfg_.swap_fraction > 0
          ? std::clamp<int64_t>(std::llround(tcfg_.swap_fraction * static_cast<double>(n)), 1, n)
          : 0;
  if (n_swap > 0) {
    auto swapped = fake.narrow(0, 0, n_swap);
    if (tcfg_.swap_loss_detach) swapped = swapped.detach();
    GeneratorFn gen = [&](const torch::Tensor& s, const torch::Tensor& t) {
      return m.generate(s, t, noise);
    };
    try {
      terms.swap =
          dual_swap_loss(gen, source.narrow(0, 0, n_swap), target.narrow(0, 0, n_swap), swapped);
    } catch (const NonFiniteAttention& e) {
      throw abort("swap", e.what());
    }
    require_finite("swap", terms.swap);
  } else {
    terms.swap = torch::zeros({}, fake.options());
  }

  LossReport& r = result.report;
  r.adv_g = terms.adv_g.item<double>();
  r.id = terms.id.item<double>();
  r.con = terms.con.item<double>();
  r.rec = terms.rec.item<double>();
  r.lm = terms.lm.item<double>();
  r.swap = terms.swap.item<double>();
  r = total_generator_loss(r, w);

  weighted_total(terms, w).backward();
  const double gen_lr =
      phase_at(k, tcfg_) == TrainPhase::kDecoder ? tcfg_.lr * tcfg_.phase2_lr_scale : tcfg_.lr;
  auto in_groups = [&](const std::string& name) {
    return std::any_of(gen_groups.begin(), gen_groups.end(),
                       [&](ParamGroup g) { return name.starts_with(group_prefix(g)); });
  };
  gen_opt_->step(gen_lr, in_groups);
  gen_opt_->zero_grad();

  // Critic update on the detached fakes.
  m.set_trainable({ParamGroup::kCritic});
  auto loss_v = adv_loss_v(m.critic->forward(target), m.critic->forward(fake.detach()));
  r.adv_v = loss_v.item<double>();
  if (!std::isfinite(r.adv_v)) throw abort("adv_v", "non-finite loss term 'adv_v'");
  loss_v.backward();
  critic_opt_->step(tcfg_.lr);
  critic_opt_->zero_grad();
  m.set_trainable({});

  ++step_;
  return result;
}

void Trainer::run(const torch::Tensor& images, int64_t until_step,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream metrics(out_dir / "metrics.jsonl", step_ == 0 ? std::ios::trunc : std::ios::app);
  if (!metrics) throw std::runtime_error("cannot write " + (out_dir / "metrics.jsonl").string());
  while (step_ < until_step) {
    const int64_t k = step_;
    auto result = train_step(sample_batch(images));
    if (k % tcfg_.metrics_every == 0) {
      metrics << metrics_record(k, result).dump() << '\n';
      metrics.flush();
    }
    if (tcfg_.checkpoint_every > 0 && step_ % tcfg_.checkpoint_every == 0) {
      save(out_dir / ("ckpt_" + std::to_string(step_) + ".sbld"));
    }
  }
}

TensorList Trainer::checkpoint_tensors() const {
  TensorList out = model_->named_parameters();
  auto g = gen_opt_->state("optim/g/");
  auto v = critic_opt_->state("optim/v/");
  out.insert(out.end(), g.begin(), g.end());
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

void Trainer::save(const std::filesystem::path& path) const {
  CheckpointManifest manifest;
  manifest.config = mcfg_;
  manifest.step = step_;
  manifest.phase = phase_at(step_, tcfg_);
  save_checkpoint(path, checkpoint_tensors(), manifest);
}

void Trainer::resume(const Checkpoint& ckpt) {
  if (!(ckpt.manifest.config == mcfg_)) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "checkpoint config does not match the training config");
  }
  model_->load_parameters(ckpt.tensors);
  gen_opt_->load_state(ckpt, "optim/g/");
  critic_opt_->load_state(ckpt, "optim/v/");
  step_ = ckpt.manifest.step;
}

}  // namespace styleblend
