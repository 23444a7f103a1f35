#include "styleblend/selfcheck.hpp"

#include <map>
#include <stdexcept>

#include <torch/torch.h>

#include "styleblend/gradcheck.hpp"
#include "styleblend/layers.hpp"
#include "styleblend/losses.hpp"
#include "styleblend/model.hpp"

namespace styleblend {

namespace {

constexpr auto kF64 = torch::kFloat64;

CheckOutcome grad_outcome(const GradCheckResult& r) {
  return {r.name, "max_rel_error", r.max_rel_error, kGradTolerance};
}

FaceSwapModel toy_model() {
  FaceSwapModel m(toy_config());
  m.to(kF64);
  return m;
}

torch::Tensor toy_images(RngStream& rng, int64_t n) {
  const int64_t s = toy_config().image_size;
  return (rng.uniform({n, 3, s, s}, kF64) * 2 - 1).contiguous();
}

std::vector<torch::Tensor> with_params(std::vector<torch::Tensor> inputs,
                                       const torch::nn::Module& m) {
  for (const auto& p : m.parameters()) inputs.push_back(p);
  return inputs;
}

CheckOutcome encoder_grad(Mutation) {
  auto rng = seeded_rng(11, "selfcheck/encoder");
  auto m = toy_model();
  auto img = toy_images(rng, 1);
  return grad_outcome(check_gradients(
      "encoder-grad", [&] { return m.encoder->forward(img).codes.sum(); }, {img}, rng));
}

CheckOutcome sbm_grad(Mutation) {
  auto rng = seeded_rng(12, "selfcheck/sbm");
  Blender sbm(8, 2, 2);
  sbm->reset(rng);
  sbm->to(kF64);
  auto ws = rng.normal({1, 4, 8}, kF64);
  auto wt = rng.normal({1, 4, 8}, kF64);
  return grad_outcome(check_gradients(
      "sbm-grad", [&] { return sbm->forward(ws, wt).codes.square().sum(); },
      with_params({ws, wt}, *sbm), rng));
}

CheckOutcome decoder_grad(Mutation) {
  auto rng = seeded_rng(13, "selfcheck/decoder");
  auto m = toy_model();
  const auto cfg = m.config();
  auto codes = rng.normal({1, cfg.style_count, cfg.style_dim}, kF64);
  FeaturePyramid pyramid;
  std::vector<torch::Tensor> inputs{codes};
  {
    torch::NoGradGuard no_grad;
    pyramid = m.encoder->forward(toy_images(rng, 1)).pyramid;
  }
  for (auto& level : pyramid.levels) {
    level = level.contiguous();
    inputs.push_back(level);
  }
  return grad_outcome(check_gradients(
      "decoder-grad",
      [&] {
        auto noise = seeded_rng(99, "selfcheck/decoder-noise");
        return m.decoder->forward(codes, pyramid, noise).square().sum();
      },
      inputs, rng));
}

CheckOutcome adain_grad(Mutation mutation) {
  auto rng = seeded_rng(14, "selfcheck/adain");
  torch::nn::Linear affine(8, 6);
  reset_parameters(*affine, rng);
  affine->to(kF64);
  auto x = rng.normal({2, 3, 5, 5}, kF64);
  auto w = rng.normal({2, 8}, kF64);
  auto proj = rng.normal({2, 3, 5, 5}, kF64);
  AdainOptions opts;
  opts.detach_statistics = mutation == Mutation::kAdainDetachedStatistics;
  return grad_outcome(check_gradients(
      "adain-grad", [&] { return (adain(x, w, affine, opts) * proj).sum(); },
      {x, w, affine->weight, affine->bias}, rng));
}

CheckOutcome id_extractor_grad(Mutation) {
  auto rng = seeded_rng(15, "selfcheck/id");
  auto m = toy_model();
  auto img = toy_images(rng, 2);
  auto u = rng.normal({2, m.config().id_dim}, kF64);
  return grad_outcome(check_gradients(
      "id-extractor-grad", [&] { return (m.id_extractor->forward(img) * u).sum(); }, {img}, rng));
}

CheckOutcome lm_extractor_grad(Mutation) {
  auto rng = seeded_rng(16, "selfcheck/lm");
  auto m = toy_model();
  auto img = toy_images(rng, 2);
  auto u = rng.normal({2, m.config().landmark_count, 2}, kF64);
  return grad_outcome(check_gradients(
      "lm-extractor-grad", [&] { return (m.landmark_extractor->forward(img) * u).sum(); }, {img},
      rng));
}

CheckOutcome loss_adv_grad(Mutation) {
  auto rng = seeded_rng(17, "selfcheck/adv");
  auto m = toy_model();
  auto img = toy_images(rng, 2);
  return grad_outcome(check_gradients(
      "loss-adv-grad", [&] { return adv_loss_g(m.critic->forward(img)); },
      with_params({img}, *m.critic), rng));
}

CheckOutcome loss_adv_v_grad(Mutation) {
  auto rng = seeded_rng(18, "selfcheck/adv-v");
  // scores kept away from the hinge corners at +-1
  auto real = (rng.uniform({6}, kF64) * 0.8 + 0.1) * torch::tensor({1, -1, 1, 3, -2, 1}, kF64);
  auto fake = (rng.uniform({6}, kF64) * 0.8 + 0.1) * torch::tensor({-1, 1, 2, -3, 1, -1}, kF64);
  real = real.contiguous();
  fake = fake.contiguous();
  return grad_outcome(check_gradients(
      "loss-adv-v-grad", [&] { return adv_loss_v(real, fake); }, {real, fake}, rng));
}

CheckOutcome loss_id_grad(Mutation) {
  auto rng = seeded_rng(19, "selfcheck/id-loss");
  auto a = rng.normal({3, 8}, kF64);
  auto b = rng.normal({3, 8}, kF64);
  return grad_outcome(check_gradients("loss-id-grad", [&] { return id_loss(a, b); }, {a, b}, rng));
}

CheckOutcome loss_con_grad(Mutation) {
  auto rng = seeded_rng(20, "selfcheck/con-loss");
  auto sw = rng.normal({4, 8}, kF64);
  auto src = rng.normal({4, 8}, kF64);
  auto tgt = rng.normal({4, 8}, kF64);
  return grad_outcome(check_gradients(
      "loss-con-grad", [&] { return contrastive_id_loss_batch(sw, src, tgt, 0.07); },
      {sw, src, tgt}, rng));
}

CheckOutcome loss_rec_grad(Mutation) {
  auto rng = seeded_rng(21, "selfcheck/rec-loss");
  auto out = rng.normal({2, 3, 4, 4}, kF64);
  auto tgt = rng.normal({2, 3, 4, 4}, kF64);
  auto same = torch::tensor({true, false});
  return grad_outcome(check_gradients(
      "loss-rec-grad", [&] { return reconstruction_loss(out, tgt, same); }, {out, tgt}, rng));
}

CheckOutcome loss_lm_grad(Mutation) {
  auto rng = seeded_rng(22, "selfcheck/lm-loss");
  auto a = rng.uniform({2, 5, 2}, kF64);
  auto b = rng.uniform({2, 5, 2}, kF64);
  return grad_outcome(
      check_gradients("loss-lm-grad", [&] { return landmark_loss(a, b); }, {a, b}, rng));
}

CheckOutcome loss_swap_grad(Mutation) {
  auto rng = seeded_rng(23, "selfcheck/swap-loss");
  auto m = toy_model();
  auto src = toy_images(rng, 1);
  auto tgt = toy_images(rng, 1);
  return grad_outcome(check_gradients(
      "loss-swap-grad",
      [&] {
        auto noise = seeded_rng(98, "selfcheck/swap-noise");
        GeneratorFn gen = [&](const torch::Tensor& s, const torch::Tensor& t) {
          return m.generate(s, t, noise);
        };
        return dual_swap_loss(gen, src, tgt, gen(src, tgt));
      },
      {src, tgt}, rng));
}

CheckOutcome partition_of_unity(Mutation) {
  auto rng = seeded_rng(24, "selfcheck/partition");
  // 1000 pairs, magnitudes up to +-100
  auto scale = torch::pow(10.0, rng.uniform({1000, 1}, torch::kFloat32) * 4 - 2);
  auto a_t = (rng.uniform({1000, 8}, torch::kFloat32) * 2 - 1) * scale;
  auto a_s = (rng.uniform({1000, 8}, torch::kFloat32) * 2 - 1) * scale;
  a_t = a_t.clamp(-100, 100);
  a_s = a_s.clamp(-100, 100);
  auto w = blend_normalize(a_t, a_s);
  auto dev = (w.target + w.source - 1).abs().max().item<double>();
  if (!torch::isfinite(w.target).all().item<bool>() ||
      !torch::isfinite(w.source).all().item<bool>()) {
    dev = INFINITY;
  }
  return {"partition-of-unity", "max_deviation", dev, kPartitionTolerance};
}

CheckOutcome blend_fixed_point(Mutation) {
  const auto cfg = ModelConfig::desk_scale();
  double worst = 0;
  torch::NoGradGuard no_grad;
  for (int trial = 0; trial < 10; ++trial) {
    auto rng = seeded_rng(25, "selfcheck/fixed-point/" + std::to_string(trial));
    Blender sbm(cfg);
    sbm->reset(rng);
    auto w = rng.normal({1, cfg.style_count, cfg.style_dim});
    auto out = sbm->forward(w, w).codes;
    worst = std::max(worst, (out - w).abs().max().item<double>());
  }
  return {"blend-fixed-point", "max_deviation", worst, kFixedPointTolerance};
}

using CheckFn = CheckOutcome (*)(Mutation);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"encoder-grad", encoder_grad},
      {"sbm-grad", sbm_grad},
      {"decoder-grad", decoder_grad},
      {"adain-grad", adain_grad},
      {"id-extractor-grad", id_extractor_grad},
      {"lm-extractor-grad", lm_extractor_grad},
      {"loss-adv-grad", loss_adv_grad},
      {"loss-adv-v-grad", loss_adv_v_grad},
      {"loss-id-grad", loss_id_grad},
      {"loss-con-grad", loss_con_grad},
      {"loss-rec-grad", loss_rec_grad},
      {"loss-lm-grad", loss_lm_grad},
      {"loss-swap-grad", loss_swap_grad},
      {"partition-of-unity", partition_of_unity},
      {"blend-fixed-point", blend_fixed_point},
  };
  return checks;
}

}  // namespace

ModelConfig toy_config() {
  ModelConfig c;
  c.image_size = 16;
  c.style_count = 6;
  c.style_dim = 8;
  c.heads = 2;
  c.sbm_layers = 2;
  c.pyramid_levels = 3;
  c.decoder_blocks = 3;
  c.id_dim = 8;
  c.landmark_count = 4;
  c.seed = 1;
  return c;
}

std::vector<std::string> selfcheck_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry()) names.push_back(name);
  return names;
}

CheckOutcome run_check(const std::string& name, Mutation mutation) {
  for (const auto& [n, fn] : registry()) {
    if (n == name) return fn(mutation);
  }
  throw std::invalid_argument("unknown check " + name);
}

std::vector<CheckOutcome> run_selfcheck(Mutation mutation,
                                        const std::function<void(const CheckOutcome&)>& on_result) {
  std::vector<CheckOutcome> out;
  for (const auto& [name, fn] : registry()) {
    out.push_back(fn(mutation));
    if (on_result) on_result(out.back());
  }
  return out;
}

}  // namespace styleblend
