// End-to-end acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "styleblend/checkpoint.hpp"
#include "styleblend/commands.hpp"
#include "styleblend/critic.hpp"
#include "styleblend/dataset.hpp"
#include "styleblend/decoder.hpp"
#include "styleblend/losses.hpp"
#include "styleblend/model.hpp"
#include "styleblend/sbm.hpp"
#include "styleblend/selfcheck.hpp"
#include "styleblend/trainer.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace styleblend;
using styleblend::testing::TempDir;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_values(const TensorList& a, const TensorList& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || !torch::equal(a[i].value, b[i].value)) return false;
  }
  return true;
}

TensorList snapshot(const TensorList& params) {
  TensorList out;
  for (const auto& p : params) out.push_back({p.name, p.value.detach().clone()});
  return out;
}

TensorList groups_snapshot(FaceSwapModel& m, std::initializer_list<ParamGroup> groups) {
  TensorList out;
  for (auto g : groups) {
    auto part = snapshot(m.group_parameters(g));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// Shared fixture: eight synthetic 64x64 faces and a desk-scale config file.
struct Workspace {
  TempDir dir{"acceptance"};
  fs::path faces = dir / "faces";
  fs::path config = dir / "desk.json";
  ModelConfig cfg = ModelConfig::desk_scale();
  torch::Tensor images;
  fs::path trained;  // checkpoint written by the overfit run

  Workspace() {
    styleblend::testing::write_synthetic_faces(faces, 8, cfg.image_size, 2024);
    std::ofstream(config) << nlohmann::json(cfg).dump(2);
    images = Dataset(faces, cfg.image_size).load_all();
  }
};

Verdict partition_of_unity() {
  const auto t0 = std::chrono::steady_clock::now();
  auto rng = seeded_rng(1, "acceptance/partition");
  double worst = 0;
  bool finite = true;
  for (int i = 0; i < 1000; ++i) {
    // magnitudes spread log-uniformly from 1e-3 to 100, plus the +-100 extremes
    const double scale = i < 10 ? 100.0 : std::pow(10.0, -3 + 5 * rng.uniform());
    auto at = (rng.uniform({12, 64}) * 2 - 1) * scale;
    auto as = (rng.uniform({12, 64}) * 2 - 1) * scale;
    if (i < 10) {
      at.narrow(0, 0, 1).fill_(i % 2 ? 100.0 : -100.0);
      as.narrow(0, 0, 1).fill_(i % 2 ? -100.0 : 100.0);
    }
    auto w = blend_normalize(at, as);
    finite = finite && torch::isfinite(w.target).all().item<bool>() &&
             torch::isfinite(w.source).all().item<bool>();
    worst = std::max(worst, (w.target + w.source - 1).abs().max().item<double>());
  }
  const double secs = seconds_since(t0);
  return {finite && worst < 1e-6 && secs < 5,
          "max|A_w^t + A_w^s - 1| = " + fmt("%.3g", worst) + (finite ? "" : ", non-finite") +
              ", " + fmt("%.2f", secs) + " s"};
}

Verdict blend_fixed_point(const ModelConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto rng = seeded_rng(2, "acceptance/fixed-point/" + std::to_string(trial));
    Blender sbm(cfg);
    sbm->reset(rng);
    {
      // rescale every weight so some parameterizations saturate the blend
      torch::NoGradGuard no_grad;
      const double gain = 0.5 + 2.5 * rng.uniform();
      for (auto& p : sbm->parameters()) p.mul_(gain);
    }
    auto w = rng.normal({2, cfg.style_count, cfg.style_dim}) * (0.1 + 10 * rng.uniform());
    torch::NoGradGuard no_grad;
    auto out = sbm->forward(w, w).codes;
    worst = std::max(worst, (out - w).abs().max().item<double>());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 10,
          "max|W' - W^t| = " + fmt("%.3g", worst) + " over 100 SBMs, " + fmt("%.2f", secs) + " s"};
}

// Independent scalar evaluation of a 1-head attention blend with identity
// projections on (L, D) codes.
std::vector<std::vector<double>> blend_by_hand(const std::vector<std::vector<double>>& s,
                                               const std::vector<std::vector<double>>& t) {
  const size_t len = s.size(), dim = s[0].size();
  auto attend = [&](const auto& q, const auto& kv) {
    std::vector<std::vector<double>> out(len, std::vector<double>(dim, 0.0));
    for (size_t i = 0; i < len; ++i) {
      std::vector<double> score(len);
      double top = -INFINITY;
      for (size_t j = 0; j < len; ++j) {
        double dot = 0;
        for (size_t c = 0; c < dim; ++c) dot += q[i][c] * kv[j][c];
        score[j] = dot / std::sqrt(static_cast<double>(dim));
        top = std::max(top, score[j]);
      }
      double z = 0;
      for (auto& v : score) z += (v = std::exp(v - top));
      for (size_t j = 0; j < len; ++j) {
        for (size_t c = 0; c < dim; ++c) out[i][c] += score[j] / z * kv[j][c];
      }
    }
    return out;
  };
  auto a_t = attend(s, t);
  auto a_s = attend(t, s);
  auto mixed = s;
  for (size_t i = 0; i < len; ++i) {
    for (size_t c = 0; c < dim; ++c) {
      const double wt = 1.0 / (1.0 + std::exp(a_s[i][c] - a_t[i][c]));
      const double ws = 1.0 / (1.0 + std::exp(a_t[i][c] - a_s[i][c]));
      mixed[i][c] = wt * t[i][c] + ws * s[i][c];
    }
  }
  return mixed;
}

Verdict oracle_equivalence() {
  Blender sbm(2, 1, 1);
  sbm->to(torch::kFloat64);
  sbm->set_identity_projections();
  torch::NoGradGuard no_grad;
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto rng = seeded_rng(3, "acceptance/oracle/" + std::to_string(trial));
    auto ws = rng.normal({1, 2, 2}, torch::kFloat64) * 3;
    auto wt = rng.normal({1, 2, 2}, torch::kFloat64) * 3;
    auto out = sbm->forward(ws, wt).codes;
    std::vector<std::vector<double>> s(2, std::vector<double>(2)), t = s;
    for (int i = 0; i < 2; ++i) {
      for (int c = 0; c < 2; ++c) {
        s[i][c] = ws[0][i][c].item<double>();
        t[i][c] = wt[0][i][c].item<double>();
      }
    }
    auto want = blend_by_hand(s, t);
    for (int i = 0; i < 2; ++i) {
      for (int c = 0; c < 2; ++c) {
        worst = std::max(worst, std::abs(out[0][i][c].item<double>() - want[i][c]));
      }
    }
  }
  return {worst < 1e-10, "max deviation from scalar evaluation " + fmt("%.3g", worst) +
                             " over 200 code pairs (L=2, D=2, float64)"};
}

Verdict adain_statistics() {
  auto rng = seeded_rng(4, "acceptance/adain");
  torch::NoGradGuard no_grad;
  double worst = 0;
  for (int64_t side : {8, 16, 32}) {
    auto x = rng.normal({4, 16, side, side}, torch::kFloat64) * 3 + 5 * rng.normal({4, 16, 1, 1}, torch::kFloat64);
    // explicit (gamma, beta)
    auto gamma = rng.uniform({4, 16}, torch::kFloat64) * 2 + 0.1;
    auto beta = rng.normal({4, 16}, torch::kFloat64) * 2;
    auto y = adain_modulate(x, gamma, beta);
    worst = std::max(worst, (y.mean({2, 3}) - beta).abs().max().item<double>());
    worst = std::max(worst, (y.std({2, 3}, /*unbiased=*/false) - gamma).abs().max().item<double>());
    // through a style affine, where gamma may be negative
    torch::nn::Linear affine(16, 32);
    affine->to(torch::kFloat64);
    auto w = rng.normal({4, 16}, torch::kFloat64);
    auto [g, b] = style_to_affine(w, affine);
    auto z = adain(x, w, affine);
    worst = std::max(worst, (z.mean({2, 3}) - b).abs().max().item<double>());
    worst = std::max(worst, (z.std({2, 3}, false) - g.abs()).abs().max().item<double>());
  }
  return {worst < 1e-3, "max |stat - (beta, gamma)| = " + fmt("%.3g", worst) +
                            " at 64, 256 and 1024 spatial cells, eps=1e-5"};
}

Verdict gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> required = {
      "encoder-grad",  "sbm-grad",      "decoder-grad", "id-extractor-grad",
      "lm-extractor-grad", "loss-adv-grad", "loss-id-grad", "loss-con-grad",
      "loss-rec-grad", "loss-lm-grad",  "loss-swap-grad"};
  bool ok = true;
  double worst = 0;
  std::string worst_name;
  for (const auto& name : selfcheck_names()) {
    if (!name.ends_with("-grad")) continue;
    auto r = run_check(name);
    std::cout << "       " << name << " max_rel_error=" << fmt("%.3g", r.value)
              << (r.passed() ? "" : "  <-- over tolerance") << '\n';
    ok = ok && r.passed();
    if (r.value >= worst) {
      worst = r.value;
      worst_name = name;
    }
  }
  for (const auto& name : required) {
    const auto names = selfcheck_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      ok = false;
      worst_name = "missing " + name;
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 120, "worst " + worst_name + " " + fmt("%.3g", worst) +
                                " (h=1e-5, 100 coordinates each), " + fmt("%.1f", secs) + " s"};
}

Verdict loss_unit_values() {
  auto d = torch::TensorOptions().dtype(torch::kFloat64);
  std::vector<std::string> bad;
  const double hinge = adv_loss_v(torch::zeros({4}, d), torch::zeros({4}, d)).item<double>();
  if (std::abs(hinge - 2.0) > 1e-12) bad.push_back("hinge " + fmt("%.17g", hinge));
  auto e = torch::eye(4, d);
  const double nce =
      contrastive_id_loss(e[0], e[1], e[2], e[3].unsqueeze(0), /*tau=*/1.0).item<double>();
  if (std::abs(nce - std::log(2.0)) > 1e-9) bad.push_back("infonce " + fmt("%.17g", nce));
  auto target = torch::rand({2, 3, 8, 8}, d);
  const double rec = reconstruction_loss(target + 1.0, target, true).item<double>();
  if (std::abs(rec - 0.5) > 1e-9) bad.push_back("rec " + fmt("%.17g", rec));
  auto v = torch::tensor({0.3, -1.2, 0.7, 2.0}, d);
  const double id = id_loss(v, -v).item<double>();
  if (std::abs(id - 2.0) > 1e-12) bad.push_back("id " + fmt("%.17g", id));

  LossWeights w;
  const double lam[5] = {w.id, w.con, w.rec, w.lm, w.swap};
  const double want_lam[5] = {10, 5, 1, 100, 1};
  if (!std::equal(lam, lam + 5, want_lam)) bad.push_back("default weights");
  double worst_rel = 0;
  auto rng = seeded_rng(6, "acceptance/linearity");
  for (int trial = 0; trial < 100; ++trial) {
    double x[6];
    for (double& xi : x) xi = (rng.uniform() * 2 - 1) * std::pow(10.0, 4 * rng.uniform() - 2);
    GeneratorTerms t{torch::tensor(x[0], d), torch::tensor(x[1], d), torch::tensor(x[2], d),
                     torch::tensor(x[3], d), torch::tensor(x[4], d), torch::tensor(x[5], d)};
    const double want = x[0] + 10 * x[1] + 5 * x[2] + 1 * x[3] + 100 * x[4] + 1 * x[5];
    LossReport r;
    r.adv_g = x[0], r.id = x[1], r.con = x[2], r.rec = x[3], r.lm = x[4], r.swap = x[5];
    for (double got : {weighted_total(t, w).item<double>(), total_generator_loss(r, w).total}) {
      worst_rel = std::max(worst_rel, std::abs(got - want) / std::max(std::abs(want), 1e-300));
    }
  }
  if (worst_rel > 1e-6) bad.push_back("linearity rel " + fmt("%.3g", worst_rel));
  std::string detail = "hinge=2, infonce=ln 2, rec=0.5, id=2; linearity rel " +
                       fmt("%.3g", worst_rel);
  for (const auto& b : bad) detail += "; BAD " + b;
  return {bad.empty(), detail};
}

Verdict curriculum(const ModelConfig& small) {
  TrainConfig tc;
  tc.total_steps = 10'000;
  bool monotone = true;
  double prev = curriculum_p(0, tc);
  for (int64_t k = 1; k < tc.total_steps; ++k) {
    const double p = curriculum_p(k, tc);
    monotone = monotone && p <= prev;
    prev = p;
  }
  const double p0 = curriculum_p(0, tc), p_end = curriculum_p(tc.total_steps - 1, tc);

  // A short run whose curriculum crosses from forced to free pairs.
  TrainConfig run;
  run.batch_size = 3;
  run.curriculum_warm_steps = 0;
  run.curriculum_decay_steps = 16;
  run.swap_fraction = 0.25;
  Trainer trainer(small, run);
  auto images = (seeded_rng(7, "acceptance/curriculum").uniform({6, 3, small.image_size,
                                                                  small.image_size}) * 2 - 1);
  int none = 0, some = 0;
  bool rec_ok = true;
  for (int k = 0; k < 24; ++k) {
    auto r = trainer.train_step(trainer.sample_batch(images));
    if (r.same_input_count == 0) {
      ++none;
      rec_ok = rec_ok && r.report.rec == 0.0;
    } else {
      ++some;
      rec_ok = rec_ok && r.report.rec > 0.0;
    }
  }
  const bool ok = p0 == 1.0 && p_end == 0.0 && monotone && rec_ok && none > 0 && some > 0;
  return {ok, "P(0)=" + fmt("%g", p0) + ", P(end)=" + fmt("%g", p_end) +
                  (monotone ? ", nonincreasing" : ", NOT monotone") + "; rec exactly 0 in " +
                  std::to_string(none) + " steps without same-input pairs" +
                  (rec_ok ? "" : ", VIOLATED")};
}

Verdict freeze_schedule(const Workspace& ws) {
  TrainConfig tc;
  tc.phase2_start = 50;
  Trainer trainer(ws.cfg, tc);
  auto& m = trainer.model();
  auto step_n = [&](int n) {
    for (int i = 0; i < n; ++i) trainer.train_step(trainer.sample_batch(ws.images));
  };
  auto dec0 = groups_snapshot(m, {ParamGroup::kDecoder});
  auto gen0 = groups_snapshot(m, {ParamGroup::kEncoder, ParamGroup::kBlender});
  step_n(50);
  auto dec1 = groups_snapshot(m, {ParamGroup::kDecoder});
  auto gen1 = groups_snapshot(m, {ParamGroup::kEncoder, ParamGroup::kBlender});
  step_n(50);
  auto dec2 = groups_snapshot(m, {ParamGroup::kDecoder});
  auto gen2 = groups_snapshot(m, {ParamGroup::kEncoder, ParamGroup::kBlender});
  const bool dec_frozen = same_values(dec0, dec1), gen_frozen = same_values(gen1, gen2);
  // the trained side must actually move, or the check proves nothing
  const bool moved = !same_values(gen0, gen1) && !same_values(dec1, dec2);
  return {dec_frozen && gen_frozen && moved,
          std::string("decoder ") + (dec_frozen ? "bit-identical" : "CHANGED") +
              " over phase-1 steps 0-49; encoder+SBM " + (gen_frozen ? "bit-identical" : "CHANGED") +
              " over phase-2 steps 50-99" + (moved ? "" : "; trained groups did not move")};
}

Verdict overfit(Workspace& ws) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig tc;
  tc.total_steps = 300;
  tc.curriculum_warm_steps = tc.total_steps;  // P_pi stays 1
  Trainer trainer(ws.cfg, tc);
  double first = 0, last = 0;
  for (int64_t k = 0; k < tc.total_steps; ++k) {
    auto r = trainer.train_step(trainer.sample_batch(ws.images));
    if (k == 0) first = r.report.rec;
    last = r.report.rec;
  }
  ws.trained = ws.dir / "overfit.sbld";
  trainer.save(ws.trained);
  const double secs = seconds_since(t0);
  return {std::isfinite(first) && last <= 0.5 * first,
          "rec " + fmt("%.4f", first) + " -> " + fmt("%.4f", last) + " (ratio " +
              fmt("%.3f", last / first) + ") in 300 steps, " + fmt("%.0f", secs) + " s"};
}

Verdict dual_swap_sanity(const Workspace& ws) {
  std::ostringstream out, err;
  const int code = cmd_losses(
      {ws.trained, ws.faces / "face00.png", ws.faces / "face01.png", std::nullopt}, out, err);
  double swap = NAN;
  if (code == kExitOk) swap = nlohmann::json::parse(out.str()).at("swap").get<double>();

  auto rng = seeded_rng(10, "acceptance/dual-swap");
  auto src = rng.uniform({2, 3, 16, 16}, torch::kFloat64);
  auto tgt = rng.uniform({2, 3, 16, 16}, torch::kFloat64);
  GeneratorFn keep_target = [](const torch::Tensor&, const torch::Tensor& t) { return t; };
  auto stub = dual_swap_terms(keep_target, src, tgt, keep_target(src, tgt));
  const double first = stub.source_cycle.item<double>();
  return {code == kExitOk && std::isfinite(swap) && first == 0.0,
          "losses exit " + std::to_string(code) + ", swap=" + fmt("%.4g", swap) +
              "; identity-on-target stub first term " + fmt("%g", first)};
}

Verdict determinism(const Workspace& ws) {
  auto train_once = [&](const std::string& tag) {
    TrainArgs args{ws.config, ws.faces, ws.dir / tag, std::nullopt, {}};
    args.train.total_steps = 50;
    std::ostringstream err;
    const int code = cmd_train(args, err);
    return std::make_pair(code, slurp(ws.dir / tag / "metrics.jsonl"));
  };
  auto [code_a, metrics_a] = train_once("det_a");
  auto [code_b, metrics_b] = train_once("det_b");
  const auto lines = std::count(metrics_a.begin(), metrics_a.end(), '\n');
  const bool metrics_ok = code_a == 0 && code_b == 0 && lines == 50 && metrics_a == metrics_b;

  auto swap_once = [&](const std::string& name) {
    std::ostringstream err;
    SwapArgs args{ws.dir / "det_a" / "final.sbld", ws.faces / "face02.png",
                  ws.faces / "face03.png", ws.dir / name, 77};
    return cmd_swap(args, err) == kExitOk ? slurp(ws.dir / name) : std::string();
  };
  const auto png_a = swap_once("swap_a.png"), png_b = swap_once("swap_b.png");
  const bool swap_ok = !png_a.empty() && png_a == png_b;
  return {metrics_ok && swap_ok,
          std::to_string(lines) + " metrics lines " + (metrics_ok ? "identical" : "DIFFER") +
              "; swap PNGs (" + std::to_string(png_a.size()) + " bytes) " +
              (swap_ok ? "byte-identical" : "DIFFER")};
}

Verdict checkpoint_round_trip(const Workspace& ws) {
  const fs::path a = ws.trained, b = ws.dir / "rt_b.sbld", c = ws.dir / "rt_c.sbld";
  auto loaded = load_checkpoint(a);
  save_checkpoint(b, loaded.tensors, loaded.manifest);
  auto reloaded = load_checkpoint(b);
  save_checkpoint(c, reloaded.tensors, reloaded.manifest);
  const auto bytes_a = slurp(a);
  const bool archive_ok = bytes_a == slurp(b) && bytes_a == slurp(c);

  TrainConfig tc;
  tc.curriculum_warm_steps = 5;
  tc.curriculum_decay_steps = 20;  // exercise forced and free pairs across the split
  Trainer straight(ws.cfg, tc);
  std::vector<std::string> want;
  for (int k = 0; k < 40; ++k) {
    auto r = straight.train_step(straight.sample_batch(ws.images));
    if (k == 19) straight.save(ws.dir / "resume_20.sbld");
    if (k >= 20) want.push_back(metrics_record(k, r).dump());
  }
  Trainer resumed(ws.cfg, tc);
  resumed.resume(load_checkpoint(ws.dir / "resume_20.sbld"));
  int matched = 0;
  for (int k = 20; k < 40; ++k) {
    auto r = resumed.train_step(resumed.sample_batch(ws.images));
    if (metrics_record(k, r).dump() == want[k - 20]) ++matched;
  }
  const bool params_ok =
      same_values(straight.checkpoint_tensors(), resumed.checkpoint_tensors());
  return {archive_ok && matched == 20 && params_ok,
          std::string("save-load-save ") + (archive_ok ? "byte-identical" : "DIFFERS") + " (" +
              std::to_string(bytes_a.size()) + " bytes); resumed run matched " +
              std::to_string(matched) + "/20 steps, final state " +
              (params_ok ? "bit-identical" : "DIFFERS")};
}

}  // namespace

int main() {
  Workspace ws;
  const ModelConfig small = styleblend::testing::small_config();

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"partition of unity", partition_of_unity},
      {"blend fixed point", [&] { return blend_fixed_point(ws.cfg); }},
      {"oracle equivalence", oracle_equivalence},
      {"adain statistics", adain_statistics},
      {"gradient checks", gradient_checks},
      {"loss unit values", loss_unit_values},
      {"curriculum", [&] { return curriculum(small); }},
      {"freeze schedule", [&] { return freeze_schedule(ws); }},
      {"overfit smoke", [&] { return overfit(ws); }},
      {"dual-swap sanity", [&] { return dual_swap_sanity(ws); }},
      {"determinism", [&] { return determinism(ws); }},
      {"checkpoint round-trip", [&] { return checkpoint_round_trip(ws); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
