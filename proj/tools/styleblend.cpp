#include <iostream>

#include <CLI11.hpp>

#include "styleblend/commands.hpp"

int main(int argc, char** argv) {
  using namespace styleblend;
  CLI::App app{"styleblend: style-code face swapping (train, swap, inspect losses, self-check)"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train on a directory of aligned face PNGs");
  train_cmd->add_option("--config", train.config, "Model config JSON")->required();
  train_cmd->add_option("--data", train.data, "Directory of PNG images")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  std::string resume;
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from");
  auto& tc = train.train;
  train_cmd->add_option("--steps", tc.total_steps, "Train until this step")->capture_default_str();
  train_cmd->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", tc.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--warm-steps", tc.curriculum_warm_steps, "Steps with P_pi = 1")
      ->capture_default_str();
  train_cmd->add_option("--decay-steps", tc.curriculum_decay_steps, "P_pi decay length")
      ->capture_default_str();
  train_cmd->add_option("--phase2-start", tc.phase2_start, "First decoder fine-tuning step")
      ->capture_default_str();
  train_cmd->add_option("--swap-fraction", tc.swap_fraction, "Batch share with dual-swap loss")
      ->capture_default_str();
  train_cmd->add_flag("--swap-detach", tc.swap_loss_detach, "Detach the first swap pass");
  train_cmd->add_option("--metrics-every", tc.metrics_every, "Steps between metrics records")
      ->capture_default_str();
  train_cmd
      ->add_option("--checkpoint-every", tc.checkpoint_every,
                   "Steps between ckpt_<step>.sbld files (0: final only)")
      ->capture_default_str();

  SwapArgs swap;
  auto* swap_cmd = app.add_subcommand("swap", "Render the source identity into the target");
  swap_cmd->add_option("--ckpt", swap.ckpt)->required();
  swap_cmd->add_option("--source", swap.source)->required();
  swap_cmd->add_option("--target", swap.target)->required();
  swap_cmd->add_option("--out", swap.out, "Output PNG")->required();
  uint64_t swap_seed = 0;
  auto* swap_seed_opt = swap_cmd->add_option("--seed", swap_seed, "Noise seed");

  LossesArgs losses;
  auto* losses_cmd = app.add_subcommand("losses", "Print every loss term for one pair as JSON");
  losses_cmd->add_option("--ckpt", losses.ckpt)->required();
  losses_cmd->add_option("--source", losses.source)->required();
  losses_cmd->add_option("--target", losses.target)->required();
  uint64_t losses_seed = 0;
  auto* losses_seed_opt = losses_cmd->add_option("--seed", losses_seed, "Noise seed");

  auto* self_cmd = app.add_subcommand("selfcheck", "Float64 gradient and invariant checks");
  std::string mutate;
  self_cmd->add_option("--mutate", mutate)->group("")->check(CLI::IsMember({"adain"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadConfig;
  }

  if (*train_cmd) {
    if (!resume.empty()) train.resume = resume;
    return cmd_train(train, std::cerr);
  }
  if (*swap_cmd) {
    if (*swap_seed_opt) swap.seed = swap_seed;
    return cmd_swap(swap, std::cerr);
  }
  if (*losses_cmd) {
    if (*losses_seed_opt) losses.seed = losses_seed;
    return cmd_losses(losses, std::cout, std::cerr);
  }
  const auto mutation = mutate == "adain" ? Mutation::kAdainDetachedStatistics : Mutation::kNone;
  return cmd_selfcheck(mutation, std::cout, std::cerr);
}
