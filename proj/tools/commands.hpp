#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "groundrl/checkpoint.hpp"
#include "groundrl/heatmap.hpp"
#include "groundrl/serialize.hpp"

namespace groundrl::cli {

struct InitOptions {
  int vocab_size = 64;
  int max_docs = 8;
  std::uint64_t seed = 0;
  double scale = 0.1;
  double eos_bias = 0.0;
  std::string out;
};

struct GenTaskOptions {
  TaskSpec spec;
  std::string out;  // empty: stdout
};

struct ScoreOptions {
  std::string batch;
  std::string checkpoint;
  ScoreConfig config;      // base config; request fields override
  std::string out;         // empty: stdout
};

struct TrainOptions {
  std::string config;
  std::string out_dir;
  bool quiet = false;
};

struct EvalOptions {
  std::string checkpoint;
  std::string tasks;
  int k_samples = 1;
  int max_len = 16;
  std::uint64_t seed = 0;
  LooMode loo_mode = LooMode::Min;
  std::string out;
};

struct HeatmapOptions {
  std::string checkpoint;
  std::string tasks;
  long index = 0;
  std::uint64_t sample_seed = 0;
  int max_len = 16;
  LooMode loo_mode = LooMode::Min;
  HeatmapFormat format = HeatmapFormat::Ansi;
  std::optional<double> absolute_scale;
  std::string out;
};

struct ServeOptions {
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int run_init(const InitOptions& opts, std::ostream& err);
int run_gen_task(const GenTaskOptions& opts, std::ostream& out, std::ostream& err);
int run_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err);
int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int run_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int run_heatmap(const HeatmapOptions& opts, std::ostream& out, std::ostream& err);
int run_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err);

struct BatchResult {
  std::string output;
  int errors = 0;
};

// Scores a line-delimited batch of ScoreRequests. Malformed lines produce an
// error record {"line": n, "error": {...}} and processing continues.
BatchResult score_batch(std::string_view batch, const Checkpoint& checkpoint, const ScoreConfig& base);

}  // namespace groundrl::cli
