#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "groundrl/version.hpp"

namespace {

groundrl::HeatmapFormat parse_format(const std::string& text) {
  if (text == "ansi") return groundrl::HeatmapFormat::Ansi;
  if (text == "plain") return groundrl::HeatmapFormat::Plain;
  return groundrl::HeatmapFormat::Html;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace groundrl;
  CLI::App app{"Contrastive-likelihood reward tooling for grounded RAG policies"};
  app.set_version_flag("--version", std::string(kEngineVersion));
  app.require_subcommand(1);

  cli::InitOptions init;
  auto* init_cmd = app.add_subcommand("init", "Write a randomly initialized policy checkpoint");
  init_cmd->add_option("--out", init.out, "Checkpoint path")->required();
  init_cmd->add_option("--vocab-size", init.vocab_size, "Vocabulary size")->capture_default_str();
  init_cmd->add_option("--max-docs", init.max_docs, "Number of reserved citation tokens")->capture_default_str();
  init_cmd->add_option("--seed", init.seed, "Initialization seed")->capture_default_str();
  init_cmd->add_option("--scale", init.scale, "Standard deviation of the weights")->capture_default_str();
  init_cmd->add_option("--eos-bias", init.eos_bias, "Added to the EOS unigram logit")->capture_default_str();

  cli::GenTaskOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-task", "Generate synthetic retrieval tasks (one JSON object per line)");
  gen_cmd->add_option("--n-docs", gen.spec.n_docs, "Documents per context")->capture_default_str();
  gen_cmd->add_option("--n-supporting", gen.spec.n_supporting, "Supporting documents per context")->capture_default_str();
  gen_cmd->add_option("--hops", gen.spec.hops, "1 or 2")->capture_default_str();
  gen_cmd->add_option("--doc-len", gen.spec.doc_len, "Tokens per document")->capture_default_str();
  gen_cmd->add_option("--key-len", gen.spec.key_len, "Key tokens in the query")->capture_default_str();
  gen_cmd->add_option("--answer-len", gen.spec.answer_len, "Answer tokens")->capture_default_str();
  gen_cmd->add_option("--vocab-size", gen.spec.vocab_size, "Vocabulary size")->capture_default_str();
  gen_cmd->add_option("--max-docs", gen.spec.max_docs, "Reserved citation tokens")->capture_default_str();
  gen_cmd->add_option("--n-tasks", gen.spec.n_tasks, "Number of task instances")->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output path (default: standard output)");

  cli::ScoreOptions score;
  std::string score_loo = "min", score_fusion = "mul", score_norm = "sqrt";
  auto* score_cmd = app.add_subcommand("score", "Score a batch of requests offline (one request per line)");
  score_cmd->add_option("--batch", score.batch, "Request batch file")->required();
  score_cmd->add_option("--checkpoint", score.checkpoint, "Policy checkpoint")->required();
  score_cmd->add_option("--tau", score.config.clr.tau, "Significance threshold")->capture_default_str();
  score_cmd->add_option("--loo-mode", score_loo, "min or avg")->check(CLI::IsMember({"min", "avg"}))->capture_default_str();
  score_cmd->add_option("--fusion", score_fusion, "mul or add")->check(CLI::IsMember({"mul", "add"}))->capture_default_str();
  score_cmd->add_option("--length-norm", score_norm, "none, sqrt or linear")
      ->check(CLI::IsMember({"none", "sqrt", "linear"}))
      ->capture_default_str();
  score_cmd->add_option("--alpha", score.config.rules.alpha, "Citation weight")->capture_default_str();
  score_cmd->add_option("--beta", score.config.rules.beta, "Correctness weight")->capture_default_str();
  score_cmd->add_option("--eta", score.config.rules.eta, "Length cost weight")->capture_default_str();
  score_cmd->add_option("--out", score.out, "Output path (default: standard output)");

  cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Run GRPO training from a config file");
  train_cmd->add_option("--config", train.config, "Training config (JSON, config_version 1)")->required();
  train_cmd->add_option("--out-dir", train.out_dir, "Directory for checkpoints, log and plots")->required();
  train_cmd->add_flag("--quiet", train.quiet, "Suppress progress lines");

  cli::EvalOptions eval;
  std::string eval_loo = "min";
  auto* eval_cmd = app.add_subcommand("eval", "Report accuracy with/without documents, reliance and perplexities");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Policy checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tasks", eval.tasks, "Task file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--k-samples", eval.k_samples, "Samples per task")->capture_default_str();
  eval_cmd->add_option("--max-len", eval.max_len, "Maximum rollout length")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "Sampling seed")->capture_default_str();
  eval_cmd->add_option("--loo-mode", eval_loo, "min or avg")->check(CLI::IsMember({"min", "avg"}))->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Output path (default: standard output)");

  cli::HeatmapOptions heat;
  std::string heat_loo = "min", heat_format = "ansi";
  double heat_scale = 0.0;
  auto* heat_cmd = app.add_subcommand("heatmap", "Render per-token evidential scores for one sampled rollout");
  heat_cmd->add_option("--checkpoint", heat.checkpoint, "Policy checkpoint")->required();
  heat_cmd->add_option("--tasks", heat.tasks, "Task file")->required();
  heat_cmd->add_option("--index", heat.index, "Task index in the file")->capture_default_str();
  heat_cmd->add_option("--sample-seed", heat.sample_seed, "Rollout sampling seed")->capture_default_str();
  heat_cmd->add_option("--max-len", heat.max_len, "Maximum rollout length")->capture_default_str();
  heat_cmd->add_option("--loo-mode", heat_loo, "min or avg")->check(CLI::IsMember({"min", "avg"}))->capture_default_str();
  heat_cmd->add_option("--format", heat_format, "ansi, plain or html")
      ->check(CLI::IsMember({"ansi", "plain", "html"}))
      ->capture_default_str();
  auto* scale_opt = heat_cmd->add_option("--scale", heat_scale, "Fixed |score| mapped to full intensity");
  heat_cmd->add_option("--out", heat.out, "Output path (default: standard output)");

  cli::ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve /score and /health over HTTP");
  serve_cmd->add_option("--checkpoint", serve.checkpoint, "Policy checkpoint")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*init_cmd) return cli::run_init(init, std::cerr);
  if (*gen_cmd) return cli::run_gen_task(gen, std::cout, std::cerr);
  if (*score_cmd) {
    score.config.clr.loo_mode = parse_loo_mode(score_loo);
    score.config.clr.fusion = parse_fusion(score_fusion);
    score.config.clr.length_norm = parse_length_norm(score_norm);
    return cli::run_score(score, std::cout, std::cerr);
  }
  if (*train_cmd) return cli::run_train(train, std::cout, std::cerr);
  if (*eval_cmd) {
    eval.loo_mode = parse_loo_mode(eval_loo);
    return cli::run_eval(eval, std::cout, std::cerr);
  }
  if (*heat_cmd) {
    heat.loo_mode = parse_loo_mode(heat_loo);
    heat.format = parse_format(heat_format);
    if (*scale_opt) heat.absolute_scale = heat_scale;
    return cli::run_heatmap(heat, std::cout, std::cerr);
  }
  if (*serve_cmd) return cli::run_serve(serve, std::cout, std::cerr);
  return 1;
}
