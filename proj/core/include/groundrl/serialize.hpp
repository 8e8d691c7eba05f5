#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "groundrl/grpo.hpp"
#include "groundrl/scoring.hpp"
#include "groundrl/synthetic.hpp"

namespace groundrl {

using Json = nlohmann::json;

// Line-delimited files: one compact JSON object per line, "\n" terminated.
// Doubles use the shortest representation that reads back to the same bits.

Json to_json(const TaskInstance& task);
TaskInstance task_from_json(const Json& j);
std::string write_tasks(const std::vector<TaskInstance>& tasks);
std::vector<TaskInstance> read_tasks(std::string_view text);

Json to_json(const RagContext& context);
RagContext context_from_json(const Json& j);

Json to_json(const ScoreConfig& config);
// Missing keys keep their defaults; unknown enum strings throw FormatError.
ScoreConfig score_config_from_json(const Json& j, ScoreConfig base = {});

Json to_json(const LikelihoodProfile& profile);
LikelihoodProfile profile_from_json(const Json& j);

Json to_json(const ScoreRequest& request);
ScoreRequest score_request_from_json(const Json& j);
Json to_json(const ScoreResponse& response);
std::string dump_line(const Json& j);

Json to_json(const TrainRecord& record);
TrainRecord train_record_from_json(const Json& j);
std::string write_train_log(const TrainLog& log);

Json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const Json& j, TaskSpec base = {});
Json to_json(const GrpoConfig& config);
GrpoConfig grpo_config_from_json(const Json& j, GrpoConfig base = {});

inline constexpr int kTrainConfigVersion = 1;

/// Versioned training configuration file:
///   {"config_version": 1, "seed": ..., "eval_seed": ..., "init": {...},
///    "task": {TaskSpec}, "grpo": {GrpoConfig}, "scoring": {ScoreConfig}}
struct TrainConfigFile {
  TaskSpec task;
  GrpoConfig grpo;
  ScoreConfig scoring;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 0;
  std::uint64_t init_seed = 0;
  double init_scale = 0.1;
  double init_eos_bias = 0.0;
};

TrainConfigFile train_config_from_json(const Json& j);
Json to_json(const TrainConfigFile& config);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string to_string(LooMode mode);
std::string to_string(Fusion fusion);
std::string to_string(LengthNorm norm);
std::string to_string(RewardMode mode);
LooMode parse_loo_mode(std::string_view text);
Fusion parse_fusion(std::string_view text);
LengthNorm parse_length_norm(std::string_view text);
RewardMode parse_reward_mode(std::string_view text);

}  // namespace groundrl
