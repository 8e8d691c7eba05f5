#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "groundrl/errors.hpp"
#include "groundrl/grpo.hpp"
#include "groundrl/rng.hpp"
#include "groundrl/server.hpp"
#include "groundrl/svg_plot.hpp"
#include "groundrl/version.hpp"

namespace groundrl::cli {

namespace {

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string error_record(std::size_t line, const std::string& kind, const std::string& message) {
  return dump_line(Json{{"line", line}, {"error", {{"kind", kind}, {"message", message}}}});
}

}  // namespace

int run_init(const InitOptions& opts, std::ostream& err) {
  try {
    const Vocabulary vocab(opts.vocab_size, opts.max_docs);
    save_checkpoint(opts.out, {vocab, random_parameters(vocab, opts.seed, opts.scale, opts.eos_bias)});
    return 0;
  } catch (const std::exception& e) {
    err << "init: " << e.what() << '\n';
    return 1;
  }
}

int run_gen_task(const GenTaskOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto tasks = gen_tasks(opts.spec);
    const Vocabulary vocab = opts.spec.vocabulary();
    for (const auto& t : tasks) {
      const auto problems = validate_instance(t, vocab, opts.spec.hops);
      if (!problems.empty()) throw GenerationError("instance " + std::to_string(t.index) + ": " + problems.front());
    }
    emit(opts.out, write_tasks(tasks), out);
    return 0;
  } catch (const std::exception& e) {
    err << "gen-task: " << e.what() << '\n';
    return 2;
  }
}

BatchResult score_batch(std::string_view batch, const Checkpoint& checkpoint, const ScoreConfig& base) {
  BatchResult result;
  const CopyMixturePolicy policy(checkpoint.vocab, checkpoint.params);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < batch.size()) {
    auto end = batch.find('\n', start);
    if (end == std::string_view::npos) end = batch.size();
    const std::string line(batch.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      if (!j.is_object()) throw FormatError("request: expected an object");
      j["config"] = to_json(j.contains("config") ? score_config_from_json(j["config"], base) : base);
      const ScoreRequest request = score_request_from_json(j);
      result.output += dump_line(to_json(process_request(request, &policy, checkpoint.vocab)));
    } catch (const Json::exception& e) {
      result.output += error_record(line_no, "malformed_body", e.what());
      ++result.errors;
    } catch (const FormatError& e) {
      result.output += error_record(line_no, "malformed_body", e.what());
      ++result.errors;
    } catch (const InvalidTokenError& e) {
      result.output += error_record(line_no, "invalid_token", e.what());
      ++result.errors;
    } catch (const ConfigError& e) {
      result.output += error_record(line_no, "invalid_request", e.what());
      ++result.errors;
    }
  }
  return result;
}

int run_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    opts.config.validate();
    const Checkpoint checkpoint = load_checkpoint(opts.checkpoint);
    const BatchResult result = score_batch(read_file(opts.batch), checkpoint, opts.config);
    emit(opts.out, result.output, out);
    if (result.errors > 0) {
      err << "score: " << result.errors << " malformed request(s); see error records\n";
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "score: " << e.what() << '\n';
    return 1;
  }
}

int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const TrainConfigFile cfg = train_config_from_json(Json::parse(read_file(opts.config)));
    const auto tasks = gen_tasks(cfg.task);
    const Vocabulary vocab = cfg.task.vocabulary();
    const PolicyParameters initial = random_parameters(vocab, cfg.init_seed, cfg.init_scale, cfg.init_eos_bias);

    groundrl::TrainOptions train_opts;
    train_opts.grpo = cfg.grpo;
    train_opts.scoring = cfg.scoring;
    train_opts.seed = cfg.seed;
    train_opts.eval_seed = cfg.eval_seed;

    const std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "initial.ckpt", {vocab, initial});

    const TrainResult result = train(vocab, initial, tasks, train_opts, [&](const TrainRecord& r) {
      if (!opts.quiet && (r.step % 25 == 0 || r.step + 1 == cfg.grpo.steps)) {
        out << "step " << r.step << " reward " << r.mean_reward << " len " << r.mean_len << " acc(q,d) "
            << r.acc_with_docs << " acc(q) " << r.acc_without_docs << " rr " << r.rr << '\n';
      }
    });

    save_checkpoint(dir / "final.ckpt", {vocab, result.params});
    write_file(dir / "train_log.jsonl", write_train_log(result.log));

    std::vector<double> reward, length, rr, acc_with, acc_without, ppl_full, ppl_loo;
    for (const auto& r : result.log) {
      reward.push_back(r.mean_reward);
      length.push_back(r.mean_len);
      rr.push_back(r.rr);
      acc_with.push_back(r.acc_with_docs);
      acc_without.push_back(r.acc_without_docs);
      ppl_full.push_back(r.ppl_full_tok);
      ppl_loo.push_back(r.ppl_loo_tok);
    }
    write_file(dir / "reward.svg", render_line_chart("Reward curve", "step", {{"mean reward", reward}}));
    write_file(dir / "length.svg", render_line_chart("Response length", "step", {{"mean length", length}}));
    write_file(dir / "reliance.svg",
               render_line_chart("Reference reliance", "step",
                                 {{"Acc(Q,D)", acc_with}, {"Acc(Q)", acc_without}, {"RR", rr}}));
    write_file(dir / "perplexity.svg",
               render_line_chart("Per-token perplexity", "step", {{"PPL full", ppl_full}, {"PPL loo", ppl_loo}}));

    Json summary = {{"engine_version", kEngineVersion}, {"config", to_json(cfg)}, {"steps", result.log.size()}};
    if (!result.log.empty()) {
      summary["first"] = to_json(result.log.front());
      summary["last"] = to_json(result.log.back());
    }
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    return 0;
  } catch (const DivergenceError& e) {
    err << "train: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << '\n';
    return 1;
  }
}

int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const Checkpoint checkpoint = load_checkpoint(opts.checkpoint);
    const auto tasks = read_tasks(read_file(opts.tasks));
    if (tasks.empty()) throw ConfigError("task file is empty");
    const CopyMixturePolicy policy(checkpoint.vocab, checkpoint.params);
    const groundrl::EvalOptions eval{opts.k_samples, opts.max_len, opts.seed};
    const ReliancePoint rr = reference_reliance(policy, tasks, eval);

    const Perplexities ppl = rollout_perplexities(policy, tasks, opts.max_len, opts.seed, opts.loo_mode);
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    const Json report = {{"n_tasks", tasks.size()},
                         {"k_samples", opts.k_samples},
                         {"acc_with_docs", rr.acc_with_docs},
                         {"acc_without_docs", rr.acc_without_docs},
                         {"rr", rr.rr},
                         {"ppl_full_seq", num(ppl.full_seq)},
                         {"ppl_full_tok", num(ppl.full_tok)},
                         {"ppl_loo_seq", num(ppl.loo_seq)},
                         {"ppl_loo_tok", num(ppl.loo_tok)},
                         {"checkpoint_version", checkpoint.params.version},
                         {"engine_version", kEngineVersion}};
    emit(opts.out, dump_line(report), out);
    return 0;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << '\n';
    return 1;
  }
}

int run_heatmap(const HeatmapOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const Checkpoint checkpoint = load_checkpoint(opts.checkpoint);
    const auto tasks = read_tasks(read_file(opts.tasks));
    if (opts.index < 0 || static_cast<std::size_t>(opts.index) >= tasks.size()) {
      throw ConfigError("task index " + std::to_string(opts.index) + " out of range (" +
                        std::to_string(tasks.size()) + " tasks)");
    }
    const TaskInstance& task = tasks[static_cast<std::size_t>(opts.index)];
    const CopyMixturePolicy policy(checkpoint.vocab, checkpoint.params);
    const Rollout r = sample_rollout(policy, task.context, opts.max_len, opts.sample_seed);
    const EvidentialScore score =
        evidential_contribution(likelihood_profile(policy, task.context, r.tokens), opts.loo_mode);
    std::vector<std::string> labels;
    for (TokenId t : r.tokens) labels.push_back(checkpoint.vocab.display(t));
    emit(opts.out, render_heatmap(make_heatmap(labels, score.token_scores, opts.absolute_scale), opts.format), out);
    return 0;
  } catch (const std::exception& e) {
    err << "heatmap: " << e.what() << '\n';
    return 1;
  }
}

int run_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    ScoringServer server(load_checkpoint(opts.checkpoint));
    const int port = server.bind(opts.host, opts.port);
    if (port < 0) throw Error("cannot bind " + opts.host + ":" + std::to_string(opts.port));
    out << "serving " << kEngineVersion << " on http://" << opts.host << ':' << port << std::endl;
    server.listen();
    return 0;
  } catch (const std::exception& e) {
    err << "serve: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace groundrl::cli
