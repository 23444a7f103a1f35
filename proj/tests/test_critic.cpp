#include <gtest/gtest.h>
#include <torch/torch.h>

#include "styleblend/critic.hpp"
#include "styleblend/gradcheck.hpp"
#include "test_util.hpp"

namespace styleblend {
namespace {

using testing::conv2d_direct;
using testing::leaky_direct;

TEST(Critic, ZeroWeightsScoreZero) {
  Critic critic(ModelConfig::desk_scale());
  torch::NoGradGuard g;
  for (auto& p : critic->parameters()) p.zero_();
  auto rng = seeded_rng(1, "test/critic");
  auto s = critic->forward(rng.uniform({3, 3, 64, 64}));
  EXPECT_TRUE(torch::equal(s, torch::zeros({3})));
}

TEST(Critic, MatchesDirectConvolutionOracle) {
  const auto cfg = testing::small_config();
  Critic critic(cfg);
  auto rng = seeded_rng(2, "test/critic");
  critic->reset(rng);
  critic->to(torch::kFloat64);
  {
    torch::NoGradGuard g;
    for (auto& p : critic->parameters()) p.copy_(rng.normal(p.sizes(), torch::kFloat64) * 0.3);
  }
  auto img = rng.uniform({2, 3, 32, 32}, torch::kFloat64) * 2 - 1;
  auto got = critic->forward(img);

  torch::Tensor want = torch::zeros({2}, torch::kFloat64);
  for (size_t s = 0; s < critic->scales.size(); ++s) {
    // average pool by 2^s written as an explicit block mean
    const int64_t f = int64_t{1} << s;
    auto x = img.reshape({2, 3, 32 / f, f, 32 / f, f}).mean({3, 5});
    auto params = critic->scales[s]->named_parameters();
    for (int i = 0; i < 4; ++i) {
      const auto n = "conv" + std::to_string(i);
      x = conv2d_direct(x, params[n + ".weight"], params[n + ".bias"], 2, 1);
      if (i < 3) x = leaky_direct(x);
    }
    want += x.mean({1, 2, 3});
  }
  want /= static_cast<double>(critic->scales.size());
  EXPECT_TRUE(torch::allclose(got, want, 1e-10, 1e-12));
}

TEST(Critic, Deterministic) {
  Critic critic(testing::small_config());
  auto rng = seeded_rng(3, "test/critic");
  critic->reset(rng);
  auto img = rng.uniform({1, 3, 32, 32});
  EXPECT_TRUE(torch::equal(critic->forward(img), critic->forward(img)));
}

TEST(Critic, ShapeMismatchThrows) {
  Critic critic(testing::small_config());
  EXPECT_THROW(critic->forward(torch::zeros({1, 3, 64, 64})), std::invalid_argument);
}

TEST(AdvLossG, Values) {
  EXPECT_EQ(adv_loss_g(torch::tensor({0.0})).item<double>(), 0.0);
  EXPECT_EQ(adv_loss_g(torch::tensor({2.5})).item<double>(), -2.5);
  EXPECT_EQ(adv_loss_g(torch::tensor({1.0, -1.0})).item<double>(), 0.0);
}

TEST(AdvLossV, Values) {
  auto v = [](double r, double f) {
    return adv_loss_v(torch::tensor({r}, torch::kFloat64), torch::tensor({f}, torch::kFloat64))
        .item<double>();
  };
  EXPECT_EQ(v(1, -1), 0.0);
  EXPECT_EQ(v(0, 0), 2.0);
  EXPECT_EQ(v(2, -3), 0.0);
}

TEST(AdvLossV, NonNegativeAndZeroExactlyAtMargins) {
  auto rng = seeded_rng(4, "test/hinge");
  for (int i = 0; i < 200; ++i) {
    auto r = rng.normal({1}, torch::kFloat64) * 3, f = rng.normal({1}, torch::kFloat64) * 3;
    const double loss = adv_loss_v(r, f).item<double>();
    EXPECT_GE(loss, 0.0);
    const bool satisfied = r.item<double>() >= 1 && f.item<double>() <= -1;
    EXPECT_EQ(loss == 0.0, satisfied);
  }
}

TEST(AdvLossV, HingeGradientWrtReal) {
  for (auto [real, grad] : {std::pair{2.0, 0.0}, std::pair{0.5, -1.0}, std::pair{-3.0, -1.0}}) {
    auto r = torch::tensor({real}, torch::kFloat64).requires_grad_(true);
    adv_loss_v(r, torch::tensor({0.0}, torch::kFloat64)).backward();
    EXPECT_EQ(r.grad().item<double>(), grad) << "real=" << real;
  }
}

}  // namespace
}  // namespace styleblend
