#include <gtest/gtest.h>
#include <torch/torch.h>

#include "styleblend/extractors.hpp"
#include "styleblend/gradcheck.hpp"
#include "styleblend/selfcheck.hpp"
#include "test_util.hpp"

namespace styleblend {
namespace {

using testing::conv2d_direct;
using testing::leaky_direct;

struct Stubs : ::testing::Test {
  ModelConfig cfg = ModelConfig::desk_scale();
  IdExtractor id{cfg};
  LandmarkExtractor lm{cfg};
  RngStream rng = seeded_rng(1, "test/extractors");

  void SetUp() override {
    id->reset(rng);
    lm->reset(rng);
  }
};

TEST_F(Stubs, EmbeddingIsUnitNorm) {
  auto e = id->forward(rng.uniform({5, 3, 64, 64}) * 2 - 1);
  EXPECT_EQ(e.sizes(), (std::vector<int64_t>{5, 64}));
  EXPECT_LT((e.norm(2, 1) - 1).abs().max().item<float>(), 1e-5);
}

TEST_F(Stubs, Deterministic) {
  auto img = rng.uniform({1, 3, 64, 64});
  EXPECT_TRUE(torch::equal(id->forward(img), id->forward(img)));
  EXPECT_TRUE(torch::equal(lm->forward(img), lm->forward(img)));
}

TEST_F(Stubs, RawEmbeddingMatchesDirectConvolutionOracle) {
  id->to(torch::kFloat64);
  auto img = rng.uniform({1, 3, 64, 64}, torch::kFloat64) * 2 - 1;
  auto x = leaky_direct(conv2d_direct(img, id->conv0->weight, id->conv0->bias, 2, 1));
  x = leaky_direct(conv2d_direct(x, id->conv1->weight, id->conv1->bias, 2, 1));
  x = leaky_direct(conv2d_direct(x, id->conv2->weight, id->conv2->bias, 2, 1));
  auto want = torch::matmul(x.mean({2, 3}), id->project->weight.t()) + id->project->bias;
  EXPECT_TRUE(torch::allclose(id->raw(img), want, 1e-10, 1e-12));
}

TEST_F(Stubs, LandmarksInUnitSquare) {
  auto pts = lm->forward(rng.uniform({4, 3, 64, 64}) * 2 - 1);
  EXPECT_EQ(pts.sizes(), (std::vector<int64_t>{4, 19, 2}));
  EXPECT_GE(pts.min().item<float>(), 0.0f);
  EXPECT_LE(pts.max().item<float>(), 1.0f);
}

TEST_F(Stubs, FrozenParameters) {
  for (auto& p : id->parameters()) EXPECT_FALSE(p.requires_grad());
  for (auto& p : lm->parameters()) EXPECT_FALSE(p.requires_grad());
}

TEST_F(Stubs, ShapeMismatchThrows) {
  EXPECT_THROW(id->forward(torch::zeros({1, 3, 32, 32})), std::invalid_argument);
  EXPECT_THROW(lm->forward(torch::zeros({1, 1, 64, 64})), std::invalid_argument);
}

TEST(SoftArgmax, UniformHeatmapGivesCenter) {
  auto p = soft_argmax(torch::zeros({7, 5}, torch::kFloat64));
  EXPECT_NEAR(p[0].item<double>(), 0.5, 1e-15);
  EXPECT_NEAR(p[1].item<double>(), 0.5, 1e-15);
}

TEST(SoftArgmax, PeakedHeatmapGivesPixelCenter) {
  for (auto [r, c] : {std::pair{0, 0}, std::pair{3, 9}, std::pair{15, 2}}) {
    auto h = torch::zeros({16, 12}, torch::kFloat64);
    h[r][c] = 100.0;
    auto p = soft_argmax(h);
    EXPECT_NEAR(p[0].item<double>(), (c + 0.5) / 12, 1e-3);
    EXPECT_NEAR(p[1].item<double>(), (r + 0.5) / 16, 1e-3);
  }
}

TEST(SoftArgmax, LandmarkCountFollowsConfig) {
  auto cfg = ModelConfig::full_scale();
  cfg.image_size = 64;
  cfg.decoder_blocks = 5;
  LandmarkExtractor lm(cfg);
  EXPECT_EQ(lm->forward(torch::zeros({1, 3, 64, 64})).size(1), 19);
}

TEST(Extractors, GradientsMatchFiniteDifferences) {
  const auto cfg = toy_config();
  IdExtractor id(cfg);
  LandmarkExtractor lm(cfg);
  auto rng = seeded_rng(2, "test/extractor-grad");
  id->reset(rng);
  lm->reset(rng);
  id->to(torch::kFloat64);
  lm->to(torch::kFloat64);
  auto img = (rng.uniform({1, 3, 16, 16}, torch::kFloat64) * 2 - 1).requires_grad_(true);
  auto u = rng.normal({1, cfg.id_dim}, torch::kFloat64);
  auto v = rng.normal({1, cfg.landmark_count, 2}, torch::kFloat64);
  EXPECT_LT(check_gradients("id", [&] { return (id->forward(img) * u).sum(); }, {img}, rng)
                .max_rel_error,
            1e-4);
  EXPECT_LT(check_gradients("lm", [&] { return (lm->forward(img) * v).sum(); }, {img}, rng)
                .max_rel_error,
            1e-4);
}

}  // namespace
}  // namespace styleblend
