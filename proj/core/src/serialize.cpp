#include "groundrl/serialize.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "groundrl/errors.hpp"

namespace groundrl {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError(std::string(what) + ": unknown field '" + key + "'");
  }
}

const Json& require(const Json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

std::vector<TokenId> tokens_from(const Json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array of token ids");
  std::vector<TokenId> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw FormatError(std::string(what) + ": token ids must be integers");
    const auto x = v.get<std::int64_t>();
    if (x < INT32_MIN || x > INT32_MAX) throw FormatError(std::string(what) + ": token id out of range");
    out.push_back(static_cast<TokenId>(x));
  }
  return out;
}

std::vector<double> doubles_from(const Json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(std::string(what) + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

double number(const Json& j, const char* what) {
  if (j.is_null()) return INFINITY;  // non-finite values are written as null
  if (!j.is_number()) throw FormatError(std::string(what) + ": expected a number");
  return j.get<double>();
}

template <typename T>
T integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw FormatError(std::string(what) + ": expected an integer");
  return j.get<T>();
}

bool boolean(const Json& j, const char* what) {
  if (!j.is_boolean()) throw FormatError(std::string(what) + ": expected a boolean");
  return j.get<bool>();
}

std::string string_of(const Json& j, const char* what) {
  if (!j.is_string()) throw FormatError(std::string(what) + ": expected a string");
  return j.get<std::string>();
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string to_string(LooMode mode) { return mode == LooMode::Min ? "min" : "avg"; }
std::string to_string(Fusion fusion) { return fusion == Fusion::Mul ? "mul" : "add"; }
std::string to_string(LengthNorm norm) {
  switch (norm) {
    case LengthNorm::None: return "none";
    case LengthNorm::Sqrt: return "sqrt";
    case LengthNorm::Linear: return "linear";
  }
  return "sqrt";
}
std::string to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::Acc: return "acc";
    case RewardMode::Cite: return "cite";
    case RewardMode::Total: return "total";
    case RewardMode::Clr: return "clr";
    case RewardMode::HybridMul: return "hybrid_mul";
    case RewardMode::HybridAdd: return "hybrid_add";
  }
  return "clr";
}

LooMode parse_loo_mode(std::string_view text) {
  if (text == "min") return LooMode::Min;
  if (text == "avg") return LooMode::Avg;
  throw FormatError("unknown loo_mode '" + std::string(text) + "' (min|avg)");
}
Fusion parse_fusion(std::string_view text) {
  if (text == "mul") return Fusion::Mul;
  if (text == "add") return Fusion::Add;
  throw FormatError("unknown fusion '" + std::string(text) + "' (mul|add)");
}
LengthNorm parse_length_norm(std::string_view text) {
  if (text == "none") return LengthNorm::None;
  if (text == "sqrt") return LengthNorm::Sqrt;
  if (text == "linear") return LengthNorm::Linear;
  throw FormatError("unknown length_norm '" + std::string(text) + "' (none|sqrt|linear)");
}
RewardMode parse_reward_mode(std::string_view text) {
  for (RewardMode m : {RewardMode::Acc, RewardMode::Cite, RewardMode::Total, RewardMode::Clr,
                       RewardMode::HybridMul, RewardMode::HybridAdd}) {
    if (text == to_string(m)) return m;
  }
  throw FormatError("unknown reward_mode '" + std::string(text) + "'");
}

Json to_json(const RagContext& context) {
  Json docs = Json::array();
  for (const auto& d : context.documents) {
    docs.push_back({{"id", d.doc_id}, {"tokens", d.tokens}, {"supporting", d.is_supporting}});
  }
  return {{"query", context.query}, {"docs", docs}};
}

RagContext context_from_json(const Json& j) {
  check_keys(j, {"query", "docs"}, "context");
  RagContext c;
  c.query = tokens_from(require(j, "query", "context"), "context.query");
  const Json& docs = require(j, "docs", "context");
  if (!docs.is_array()) throw FormatError("context.docs: expected an array");
  for (const auto& d : docs) {
    check_keys(d, {"id", "tokens", "supporting"}, "document");
    Document doc;
    doc.doc_id = integer<int>(require(d, "id", "document"), "document.id");
    doc.tokens = tokens_from(require(d, "tokens", "document"), "document.tokens");
    doc.is_supporting = d.contains("supporting") ? boolean(d["supporting"], "document.supporting") : false;
    c.documents.push_back(std::move(doc));
  }
  return c;
}

Json to_json(const TaskInstance& task) {
  Json j = to_json(task.context);
  j["answer"] = task.answer;
  j["bridge"] = task.bridge ? Json(*task.bridge) : Json(nullptr);
  j["seed"] = task.seed;
  j["index"] = task.index;
  return j;
}

TaskInstance task_from_json(const Json& j) {
  check_keys(j, {"query", "docs", "answer", "bridge", "seed", "index"}, "task");
  TaskInstance t;
  Json ctx = {{"query", require(j, "query", "task")}, {"docs", require(j, "docs", "task")}};
  t.context = context_from_json(ctx);
  t.answer = tokens_from(require(j, "answer", "task"), "task.answer");
  if (j.contains("bridge") && !j["bridge"].is_null()) t.bridge = integer<TokenId>(j["bridge"], "task.bridge");
  if (j.contains("seed")) t.seed = integer<std::uint64_t>(j["seed"], "task.seed");
  if (j.contains("index")) t.index = integer<std::uint64_t>(j["index"], "task.index");
  return t;
}

std::string dump_line(const Json& j) { return j.dump() + "\n"; }

std::string write_tasks(const std::vector<TaskInstance>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += dump_line(to_json(t));
  return out;
}

std::vector<TaskInstance> read_tasks(std::string_view text) {
  std::vector<TaskInstance> tasks;
  int line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      tasks.push_back(task_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw FormatError("task file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("task file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

Json to_json(const ScoreConfig& c) {
  return {{"tau", c.clr.tau},
          {"loo_mode", to_string(c.clr.loo_mode)},
          {"norm_epsilon", c.clr.norm_epsilon},
          {"fusion", to_string(c.clr.fusion)},
          {"length_norm", to_string(c.clr.length_norm)},
          {"alpha", c.rules.alpha},
          {"beta", c.rules.beta},
          {"eta", c.rules.eta}};
}

ScoreConfig score_config_from_json(const Json& j, ScoreConfig c) {
  check_keys(j, {"tau", "loo_mode", "norm_epsilon", "fusion", "length_norm", "alpha", "beta", "eta"}, "config");
  if (j.contains("tau")) c.clr.tau = number(j["tau"], "config.tau");
  if (j.contains("loo_mode")) c.clr.loo_mode = parse_loo_mode(string_of(j["loo_mode"], "config.loo_mode"));
  if (j.contains("norm_epsilon")) c.clr.norm_epsilon = number(j["norm_epsilon"], "config.norm_epsilon");
  if (j.contains("fusion")) c.clr.fusion = parse_fusion(string_of(j["fusion"], "config.fusion"));
  if (j.contains("length_norm")) {
    c.clr.length_norm = parse_length_norm(string_of(j["length_norm"], "config.length_norm"));
  }
  if (j.contains("alpha")) c.rules.alpha = number(j["alpha"], "config.alpha");
  if (j.contains("beta")) c.rules.beta = number(j["beta"], "config.beta");
  if (j.contains("eta")) c.rules.eta = number(j["eta"], "config.eta");
  return c;
}

Json to_json(const LikelihoodProfile& p) {
  Json loo = Json::object();
  for (const auto& [doc, v] : p.loo) loo[std::to_string(doc)] = v;
  return {{"full", p.full}, {"loo", loo}};
}

LikelihoodProfile profile_from_json(const Json& j) {
  check_keys(j, {"full", "loo"}, "profile");
  LikelihoodProfile p;
  p.full = doubles_from(require(j, "full", "profile"), "profile.full");
  const Json& loo = require(j, "loo", "profile");
  if (!loo.is_object()) throw FormatError("profile.loo: expected an object keyed by doc id");
  for (const auto& [key, value] : loo.items()) {
    std::size_t used = 0;
    int doc = 0;
    try {
      doc = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || key.empty()) throw FormatError("profile.loo: key '" + key + "' is not a doc id");
    p.loo[doc] = doubles_from(value, "profile.loo");
  }
  return p;
}

Json to_json(const ScoreRequest& r) {
  Json j = {{"context", to_json(r.context)},
            {"rollouts", r.rollouts},
            {"answer", r.answer},
            {"config", to_json(r.config)}};
  if (r.profiles) {
    Json ps = Json::array();
    for (const auto& p : *r.profiles) ps.push_back(to_json(p));
    j["profiles"] = ps;
  }
  if (r.return_eps) j["return_eps"] = true;
  return j;
}

ScoreRequest score_request_from_json(const Json& j) {
  check_keys(j, {"context", "rollouts", "answer", "config", "profiles", "return_eps"}, "request");
  ScoreRequest r;
  r.context = context_from_json(require(j, "context", "request"));
  const Json& rollouts = require(j, "rollouts", "request");
  if (!rollouts.is_array()) throw FormatError("request.rollouts: expected an array");
  for (const auto& ro : rollouts) r.rollouts.push_back(tokens_from(ro, "request.rollouts"));
  r.answer = tokens_from(require(j, "answer", "request"), "request.answer");
  if (j.contains("config")) r.config = score_config_from_json(j["config"]);
  if (j.contains("profiles") && !j["profiles"].is_null()) {
    const Json& ps = j["profiles"];
    if (!ps.is_array()) throw FormatError("request.profiles: expected an array");
    std::vector<LikelihoodProfile> profiles;
    for (const auto& p : ps) profiles.push_back(profile_from_json(p));
    r.profiles = std::move(profiles);
  }
  if (j.contains("return_eps")) r.return_eps = boolean(j["return_eps"], "request.return_eps");
  return r;
}

Json to_json(const ScoreResponse& r) {
  Json bundles = Json::array();
  for (const auto& b : r.bundles) {
    bundles.push_back({{"r_clr_raw", b.r_clr_raw},
                       {"r_clr_norm", b.r_clr_norm},
                       {"r_acc", b.r_acc},
                       {"r_cite", b.r_cite},
                       {"r_hybrid", b.r_hybrid},
                       {"r_total", b.r_total}});
  }
  Json j = {{"bundles", bundles}, {"engine_version", r.engine_version}, {"config", to_json(r.config)}};
  if (r.eps) j["eps"] = *r.eps;
  return j;
}

Json to_json(const TrainRecord& r) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"step", r.step},
          {"mean_reward", num(r.mean_reward)},
          {"mean_len", num(r.mean_len)},
          {"acc_with_docs", num(r.acc_with_docs)},
          {"acc_without_docs", num(r.acc_without_docs)},
          {"rr", num(r.rr)},
          {"ppl_full_seq", num(r.ppl_full_seq)},
          {"ppl_full_tok", num(r.ppl_full_tok)},
          {"ppl_loo_seq", num(r.ppl_loo_seq)},
          {"ppl_loo_tok", num(r.ppl_loo_tok)}};
}

TrainRecord train_record_from_json(const Json& j) {
  check_keys(j,
             {"step", "mean_reward", "mean_len", "acc_with_docs", "acc_without_docs", "rr", "ppl_full_seq",
              "ppl_full_tok", "ppl_loo_seq", "ppl_loo_tok"},
             "train record");
  TrainRecord r;
  r.step = integer<int>(require(j, "step", "train record"), "step");
  r.mean_reward = number(require(j, "mean_reward", "train record"), "mean_reward");
  r.mean_len = number(require(j, "mean_len", "train record"), "mean_len");
  r.acc_with_docs = number(require(j, "acc_with_docs", "train record"), "acc_with_docs");
  r.acc_without_docs = number(require(j, "acc_without_docs", "train record"), "acc_without_docs");
  r.rr = number(require(j, "rr", "train record"), "rr");
  r.ppl_full_seq = number(require(j, "ppl_full_seq", "train record"), "ppl_full_seq");
  r.ppl_full_tok = number(require(j, "ppl_full_tok", "train record"), "ppl_full_tok");
  r.ppl_loo_seq = number(require(j, "ppl_loo_seq", "train record"), "ppl_loo_seq");
  r.ppl_loo_tok = number(require(j, "ppl_loo_tok", "train record"), "ppl_loo_tok");
  return r;
}

std::string write_train_log(const TrainLog& log) {
  std::string out;
  for (const auto& r : log) out += dump_line(to_json(r));
  return out;
}

Json to_json(const TaskSpec& s) {
  return {{"n_docs", s.n_docs},         {"n_supporting", s.n_supporting}, {"hops", s.hops},
          {"doc_len", s.doc_len},       {"key_len", s.key_len},           {"answer_len", s.answer_len},
          {"vocab_size", s.vocab_size}, {"max_docs", s.max_docs},         {"n_tasks", s.n_tasks},
          {"seed", s.seed}};
}

TaskSpec task_spec_from_json(const Json& j, TaskSpec s) {
  check_keys(j,
             {"n_docs", "n_supporting", "hops", "doc_len", "key_len", "answer_len", "vocab_size", "max_docs",
              "n_tasks", "seed"},
             "task");
  if (j.contains("n_docs")) s.n_docs = integer<int>(j["n_docs"], "task.n_docs");
  if (j.contains("n_supporting")) s.n_supporting = integer<int>(j["n_supporting"], "task.n_supporting");
  if (j.contains("hops")) s.hops = integer<int>(j["hops"], "task.hops");
  if (j.contains("doc_len")) s.doc_len = integer<int>(j["doc_len"], "task.doc_len");
  if (j.contains("key_len")) s.key_len = integer<int>(j["key_len"], "task.key_len");
  if (j.contains("answer_len")) s.answer_len = integer<int>(j["answer_len"], "task.answer_len");
  if (j.contains("vocab_size")) s.vocab_size = integer<int>(j["vocab_size"], "task.vocab_size");
  if (j.contains("max_docs")) s.max_docs = integer<int>(j["max_docs"], "task.max_docs");
  if (j.contains("n_tasks")) s.n_tasks = integer<int>(j["n_tasks"], "task.n_tasks");
  if (j.contains("seed")) s.seed = integer<std::uint64_t>(j["seed"], "task.seed");
  return s;
}

Json to_json(const GrpoConfig& c) {
  return {{"group_size", c.group_size},
          {"clip_epsilon", c.clip_epsilon},
          {"kl_beta", c.kl_beta},
          {"learning_rate", c.learning_rate},
          {"steps", c.steps},
          {"reward_mode", to_string(c.reward_mode)},
          {"adv_epsilon", c.adv_epsilon},
          {"max_len", c.max_len},
          {"batch_size", c.batch_size},
          {"divergence_bound", c.divergence_bound},
          {"eval_k", c.eval_k},
          {"eval_max_len", c.eval_max_len}};
}

GrpoConfig grpo_config_from_json(const Json& j, GrpoConfig c) {
  check_keys(j,
             {"group_size", "clip_epsilon", "kl_beta", "learning_rate", "steps", "reward_mode", "adv_epsilon",
              "max_len", "batch_size", "divergence_bound", "eval_k", "eval_max_len"},
             "grpo");
  if (j.contains("group_size")) c.group_size = integer<int>(j["group_size"], "grpo.group_size");
  if (j.contains("clip_epsilon")) c.clip_epsilon = number(j["clip_epsilon"], "grpo.clip_epsilon");
  if (j.contains("kl_beta")) c.kl_beta = number(j["kl_beta"], "grpo.kl_beta");
  if (j.contains("learning_rate")) c.learning_rate = number(j["learning_rate"], "grpo.learning_rate");
  if (j.contains("steps")) c.steps = integer<int>(j["steps"], "grpo.steps");
  if (j.contains("reward_mode")) c.reward_mode = parse_reward_mode(string_of(j["reward_mode"], "grpo.reward_mode"));
  if (j.contains("adv_epsilon")) c.adv_epsilon = number(j["adv_epsilon"], "grpo.adv_epsilon");
  if (j.contains("max_len")) c.max_len = integer<int>(j["max_len"], "grpo.max_len");
  if (j.contains("batch_size")) c.batch_size = integer<int>(j["batch_size"], "grpo.batch_size");
  if (j.contains("divergence_bound")) c.divergence_bound = number(j["divergence_bound"], "grpo.divergence_bound");
  if (j.contains("eval_k")) c.eval_k = integer<int>(j["eval_k"], "grpo.eval_k");
  if (j.contains("eval_max_len")) c.eval_max_len = integer<int>(j["eval_max_len"], "grpo.eval_max_len");
  return c;
}

TrainConfigFile train_config_from_json(const Json& j) {
  check_keys(j, {"config_version", "seed", "eval_seed", "init", "task", "grpo", "scoring"}, "train config");
  const int version = integer<int>(require(j, "config_version", "train config"), "config_version");
  if (version != kTrainConfigVersion) {
    throw FormatError("train config: unsupported config_version " + std::to_string(version));
  }
  TrainConfigFile c;
  if (j.contains("seed")) c.seed = integer<std::uint64_t>(j["seed"], "seed");
  if (j.contains("eval_seed")) c.eval_seed = integer<std::uint64_t>(j["eval_seed"], "eval_seed");
  if (j.contains("init")) {
    const Json& init = j["init"];
    check_keys(init, {"seed", "scale", "eos_bias"}, "init");
    if (init.contains("seed")) c.init_seed = integer<std::uint64_t>(init["seed"], "init.seed");
    if (init.contains("scale")) c.init_scale = number(init["scale"], "init.scale");
    if (init.contains("eos_bias")) c.init_eos_bias = number(init["eos_bias"], "init.eos_bias");
  }
  if (j.contains("task")) c.task = task_spec_from_json(j["task"]);
  if (j.contains("grpo")) c.grpo = grpo_config_from_json(j["grpo"]);
  if (j.contains("scoring")) c.scoring = score_config_from_json(j["scoring"]);
  return c;
}

Json to_json(const TrainConfigFile& c) {
  return {{"config_version", kTrainConfigVersion},
          {"seed", c.seed},
          {"eval_seed", c.eval_seed},
          {"init", {{"seed", c.init_seed}, {"scale", c.init_scale}, {"eos_bias", c.init_eos_bias}}},
          {"task", to_json(c.task)},
          {"grpo", to_json(c.grpo)},
          {"scoring", to_json(c.scoring)}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace groundrl
