#include "styleblend/commands.hpp"

#include <cstdlib>
#include <iomanip>
#include <ostream>

#include <torch/torch.h>

#include "styleblend/dataset.hpp"
#include "styleblend/image_io.hpp"

namespace styleblend {

namespace {

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message,
         nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  extra["exit_code"] = code;
  err << extra.dump() << std::endl;
  return code;
}

struct Loaded {
  std::unique_ptr<FaceSwapModel> model;
  uint64_t seed = 0;
};

// Builds a model from a checkpoint; throws CheckpointError or ConfigError.
std::unique_ptr<FaceSwapModel> model_from_checkpoint(const std::filesystem::path& path) {
  auto ckpt = load_checkpoint(path);
  ckpt.manifest.config.validate();
  auto model = std::make_unique<FaceSwapModel>(ckpt.manifest.config);
  model->load_parameters(ckpt.tensors);
  return model;
}

uint64_t pick_seed(std::optional<uint64_t> explicit_seed, uint64_t fallback) {
  if (explicit_seed) return *explicit_seed;
  if (auto env = seed_from_env()) return *env;
  return fallback;
}

}  // namespace

std::optional<uint64_t> seed_from_env() {
  const char* v = std::getenv(kSeedEnvVar);
  if (!v || !*v) return std::nullopt;
  try {
    size_t used = 0;
    const auto seed = std::stoull(v, &used);
    if (used != std::string(v).size()) return std::nullopt;
    return seed;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

int cmd_train(const TrainArgs& args, std::ostream& err) {
  ModelConfig cfg;
  try {
    cfg = load_config(args.config);
    if (auto env = seed_from_env()) cfg.seed = *env;
    args.train.validate();
  } catch (const std::invalid_argument& e) {
    return fail(err, kExitBadConfig, "config", e.what());
  }

  torch::Tensor images;
  try {
    Dataset data(args.data, cfg.image_size);
    if (data.size() < 2) {
      return fail(err, kExitBadData, "data", "need at least 2 images in " + args.data.string());
    }
    images = data.load_all();
  } catch (const ImageError& e) {
    return fail(err, kExitBadData, "data", e.what());
  }

  Trainer trainer(cfg, args.train);
  if (args.resume) {
    try {
      trainer.resume(load_checkpoint(*args.resume));
    } catch (const CheckpointError& e) {
      return fail(err, kExitBadConfig, "checkpoint", e.what());
    }
  }
  try {
    trainer.run(images, args.train.total_steps, args.out);
    trainer.save(args.out / "final.sbld");
  } catch (const NonFiniteLoss& e) {
    return fail(err, kExitNonFinite, "non_finite_loss", e.what(), {{"term", e.term()}});
  } catch (const std::exception& e) {
    return fail(err, kExitFailure, "io", e.what());
  }
  return kExitOk;
}

int cmd_swap(const SwapArgs& args, std::ostream& err) {
  std::unique_ptr<FaceSwapModel> model;
  try {
    model = model_from_checkpoint(args.ckpt);
  } catch (const std::exception& e) {
    return fail(err, kExitBadConfig, "checkpoint", e.what());
  }
  const auto& cfg = model->config();
  torch::Tensor source, target;
  try {
    source = load_face(args.source, cfg.image_size).unsqueeze(0);
    target = load_face(args.target, cfg.image_size).unsqueeze(0);
  } catch (const ImageError& e) {
    return fail(err, kExitBadData, "image", e.what());
  }
  torch::NoGradGuard no_grad;
  auto noise = seeded_rng(pick_seed(args.seed, cfg.seed), "swap");
  torch::Tensor out;
  try {
    out = model->generate(source, target, noise);
  } catch (const NonFiniteAttention& e) {
    return fail(err, kExitBadConfig, "checkpoint", std::string("diverged weights: ") + e.what());
  }
  try {
    write_png(args.out, to_rgb(out[0]));
  } catch (const ImageError& e) {
    return fail(err, kExitFailure, "io", e.what());
  }
  return kExitOk;
}

nlohmann::json pair_losses(FaceSwapModel& model, const torch::Tensor& source,
                           const torch::Tensor& target, uint64_t noise_seed,
                           const LossWeights& weights) {
  torch::NoGradGuard no_grad;
  const bool same = torch::equal(source, target);
  auto noise = seeded_rng(noise_seed, "losses");
  auto fake = model.generate(source, target, noise);

  LossReport r;
  const auto fake_score = model.critic->forward(fake);
  r.adv_g = adv_loss_g(fake_score).item<double>();
  r.adv_v = adv_loss_v(model.critic->forward(target), fake_score).item<double>();
  auto ids = model.id_extractor->forward(torch::cat({fake, source, target}, 0)).chunk(3, 0);
  r.id = id_loss(ids[0], ids[1]).item<double>();
  r.con = contrastive_id_loss_batch(ids[0], ids[1], ids[2], weights.tau,
                                    weights.con_denominator_includes_positive)
              .item<double>();
  r.rec = reconstruction_loss(fake, target, same).item<double>();
  auto lms = model.landmark_extractor->forward(torch::cat({target, fake}, 0)).chunk(2, 0);
  r.lm = landmark_loss(lms[0], lms[1]).item<double>();
  GeneratorFn gen = [&](const torch::Tensor& s, const torch::Tensor& t) {
    return model.generate(s, t, noise);
  };
  r.swap = dual_swap_loss(gen, source, target, fake).item<double>();
  r = total_generator_loss(r, weights);

  nlohmann::json j = r;
  j["rec_unpaired"] = reconstruction_loss(fake, target, false).item<double>();
  j["same_input"] = same;
  return j;
}

int cmd_losses(const LossesArgs& args, std::ostream& out, std::ostream& err) {
  std::unique_ptr<FaceSwapModel> model;
  try {
    model = model_from_checkpoint(args.ckpt);
  } catch (const std::exception& e) {
    return fail(err, kExitBadConfig, "checkpoint", e.what());
  }
  const auto& cfg = model->config();
  torch::Tensor source, target;
  try {
    source = load_face(args.source, cfg.image_size).unsqueeze(0);
    target = load_face(args.target, cfg.image_size).unsqueeze(0);
  } catch (const ImageError& e) {
    return fail(err, kExitBadData, "image", e.what());
  }
  try {
    out << pair_losses(*model, source, target, pick_seed(args.seed, cfg.seed)).dump() << std::endl;
  } catch (const NonFiniteLoss& e) {
    return fail(err, kExitNonFinite, "non_finite_loss", e.what(), {{"term", e.term()}});
  } catch (const NonFiniteAttention& e) {
    return fail(err, kExitNonFinite, "non_finite_loss", e.what(), {{"term", "generator"}});
  }
  return kExitOk;
}

int cmd_selfcheck(Mutation mutation, std::ostream& out, std::ostream& err) {
  std::optional<std::string> first_failure;
  run_selfcheck(mutation, [&](const CheckOutcome& c) {
    out << std::left << std::setw(20) << c.name << ' ' << c.metric << '=' << std::scientific
        << std::setprecision(3) << c.value << " (< " << c.threshold << ") "
        << (c.passed() ? "PASS" : "FAIL") << std::defaultfloat << std::endl;
    if (!c.passed() && !first_failure) first_failure = c.name;
  });
  if (first_failure) {
    return fail(err, kExitFailure, "selfcheck", "check failed: " + *first_failure,
                {{"check", *first_failure}});
  }
  return kExitOk;
}

}  // namespace styleblend
