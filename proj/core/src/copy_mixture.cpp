#include "groundrl/copy_mixture.hpp"

#include <algorithm>
#include <cmath>

#include "groundrl/errors.hpp"
#include "groundrl/rng.hpp"

namespace groundrl {

PolicyParameters PolicyParameters::zeros(int vocab_size) {
  PolicyParameters p;
  p.gate.assign(kGateFeatureCount, 0.0);
  p.unigram.assign(static_cast<std::size_t>(vocab_size), 0.0);
  p.copy.assign(kCopyFeatureCount, 0.0);
  return p;
}

std::vector<double> PolicyParameters::flat() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), gate.begin(), gate.end());
  out.insert(out.end(), unigram.begin(), unigram.end());
  out.insert(out.end(), copy.begin(), copy.end());
  return out;
}

void PolicyParameters::assign_flat(std::span<const double> values) {
  if (values.size() != size()) throw ConfigError("parameters: flat size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) at(i) = values[i];
}

double& PolicyParameters::at(std::size_t i) {
  if (i < gate.size()) return gate[i];
  i -= gate.size();
  if (i < unigram.size()) return unigram[i];
  i -= unigram.size();
  if (i < copy.size()) return copy[i];
  throw ConfigError("parameters: flat index out of range");
}

double PolicyParameters::at(std::size_t i) const {
  return const_cast<PolicyParameters&>(*this).at(i);
}

bool PolicyParameters::same_layout(const PolicyParameters& other) const {
  return gate.size() == other.gate.size() && unigram.size() == other.unigram.size() &&
         copy.size() == other.copy.size();
}

void PolicyParameters::axpy(double scale_by, const PolicyParameters& other) {
  if (!same_layout(other)) throw ConfigError("parameters: layout mismatch in axpy");
  for (std::size_t i = 0; i < gate.size(); ++i) gate[i] += scale_by * other.gate[i];
  for (std::size_t i = 0; i < unigram.size(); ++i) unigram[i] += scale_by * other.unigram[i];
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i] += scale_by * other.copy[i];
}

void PolicyParameters::scale(double factor) {
  for (double& v : gate) v *= factor;
  for (double& v : unigram) v *= factor;
  for (double& v : copy) v *= factor;
}

bool PolicyParameters::all_finite() const {
  auto finite = [](const std::vector<double>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(gate) && finite(unigram) && finite(copy);
}

double PolicyParameters::mean_abs() const {
  const std::size_t n = size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (double v : gate) total += std::abs(v);
  for (double v : unigram) total += std::abs(v);
  for (double v : copy) total += std::abs(v);
  return total / static_cast<double>(n);
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool has_continuation(const Prompt& prompt, TokenId last) {
  const auto positions = prompt.positions();
  for (std::size_t j = 1; j < positions.size(); ++j) {
    if (positions[j].offset > 0 && positions[j - 1].token == last) return true;
  }
  return false;
}

}  // namespace

std::array<double, kGateFeatureCount> gate_features(const Prompt& prompt,
                                                    std::span<const TokenId> prefix) {
  std::array<double, kGateFeatureCount> f{};
  const std::size_t t = prefix.size();
  f[kGateBias] = 1.0;
  f[kGateStep] = 0.1 * static_cast<double>(t);
  if (t > 0) {
    const TokenId last = prefix.back();
    f[kGatePrevInContext] = prompt.contains_token(last) ? 1.0 : 0.0;
    f[kGateHasContinuation] = has_continuation(prompt, last) ? 1.0 : 0.0;
    std::size_t found = 0;
    for (TokenId tok : prefix) found += prompt.contains_token(tok) ? 1 : 0;
    f[kGateCopiedFraction] = static_cast<double>(found) / static_cast<double>(t);
  }
  std::size_t relevant = 0, open = 0;
  for (const PromptPosition& pos : prompt.positions()) {
    if (!pos.segment_matches) continue;
    ++relevant;
    if (std::find(prefix.begin(), prefix.end(), pos.token) == prefix.end()) ++open;
  }
  if (relevant > 0) f[kGateRelevantOpen] = static_cast<double>(open) / static_cast<double>(relevant);
  return f;
}

std::array<double, kCopyFeatureCount> copy_features(const Prompt& prompt, std::size_t j,
                                                    std::span<const TokenId> prefix) {
  std::array<double, kCopyFeatureCount> f{};
  const auto positions = prompt.positions();
  const PromptPosition& pos = positions[j];
  const std::size_t t = prefix.size();
  const bool has_prev = pos.offset >= 1;
  const bool has_prev2 = pos.offset >= 2;

  f[kCopyQueryMatch] = pos.query_content ? 1.0 : 0.0;
  if (has_prev) {
    const TokenId prev = positions[j - 1].token;
    f[kCopyAfterQueryMatch] = positions[j - 1].query_content ? 1.0 : 0.0;
    if (t >= 1 && prev == prefix[t - 1]) {
      f[kCopyContinues1] = 1.0;
      if (has_prev2 && t >= 2 && positions[j - 2].token == prefix[t - 2]) f[kCopyContinues2] = 1.0;
    }
  }
  f[kCopyInQuery] = pos.doc_id < 0 ? 1.0 : 0.0;
  f[kCopyRelativePosition] =
      pos.segment_len > 1 ? static_cast<double>(pos.offset) / static_cast<double>(pos.segment_len - 1) : 0.0;
  f[kCopyIsMarker] = (pos.doc_id >= 0 && pos.offset == 0) ? 1.0 : 0.0;
  f[kCopyDocMatchesQuery] = pos.segment_matches ? 1.0 : 0.0;
  return f;
}

CopyMixturePolicy::CopyMixturePolicy(Vocabulary vocab, PolicyParameters params)
    : vocab_(vocab), params_(std::move(params)) {
  if (params_.gate.size() != kGateFeatureCount || params_.copy.size() != kCopyFeatureCount ||
      params_.unigram.size() != static_cast<std::size_t>(vocab_.size())) {
    throw ConfigError("copy-mixture policy: parameter layout does not match vocabulary/features");
  }
  if (!params_.all_finite()) throw ConfigError("copy-mixture policy: non-finite parameters");
}

StepForward CopyMixturePolicy::forward(const Prompt& prompt, std::span<const TokenId> prefix) const {
  vocab_.check(prefix);
  const std::size_t V = static_cast<std::size_t>(vocab_.size());
  StepForward step;

  // Background unigram.
  step.unigram.resize(V);
  const double umax = *std::max_element(params_.unigram.begin(), params_.unigram.end());
  double uz = 0.0;
  for (std::size_t v = 0; v < V; ++v) {
    step.unigram[v] = std::exp(params_.unigram[v] - umax);
    uz += step.unigram[v];
  }
  for (double& u : step.unigram) u /= uz;

  step.copy_dist.assign(V, 0.0);
  step.gate_features = gate_features(prompt, prefix);
  const auto positions = prompt.positions();
  std::vector<std::size_t> open;
  open.reserve(positions.size());
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (std::find(prefix.begin(), prefix.end(), positions[j].token) == prefix.end()) open.push_back(j);
  }
  if (!open.empty()) {
    double g = 0.0;
    for (std::size_t k = 0; k < kGateFeatureCount; ++k) g += params_.gate[k] * step.gate_features[k];
    step.gate = sigmoid(g);

    const std::size_t P = open.size();
    step.copy_features.resize(P);
    step.copy_attn.resize(P);
    step.copy_tokens.resize(P);
    double amax = -INFINITY;
    for (std::size_t i = 0; i < P; ++i) {
      step.copy_features[i] = copy_features(prompt, open[i], prefix);
      double a = 0.0;
      for (std::size_t k = 0; k < kCopyFeatureCount; ++k) a += params_.copy[k] * step.copy_features[i][k];
      step.copy_attn[i] = a;
      step.copy_tokens[i] = positions[open[i]].token;
      amax = std::max(amax, a);
    }
    double az = 0.0;
    for (double& a : step.copy_attn) {
      a = std::exp(a - amax);
      az += a;
    }
    for (std::size_t i = 0; i < P; ++i) {
      step.copy_attn[i] /= az;
      step.copy_dist[static_cast<std::size_t>(step.copy_tokens[i])] += step.copy_attn[i];
    }
  }

  const double keep = 1.0 - kSmoothingFloor;
  const double floor_mass = kSmoothingFloor / static_cast<double>(V);
  step.probs.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    const double mix = step.gate * step.copy_dist[v] + (1.0 - step.gate) * step.unigram[v];
    step.probs[v] = keep * mix + floor_mass;
  }
  return step;
}

std::vector<double> CopyMixturePolicy::next_token_distribution(const Prompt& prompt,
                                                               std::span<const TokenId> prefix) const {
  return forward(prompt, prefix).probs;
}

void CopyMixturePolicy::backward(const StepForward& step, std::span<const double> dloss_dprobs,
                                 PolicyParameters& grad) const {
  const std::size_t V = step.probs.size();
  const double keep = 1.0 - kSmoothingFloor;
  const double s = step.gate;

  // Unigram softmax.
  double dot_u = 0.0;
  for (std::size_t v = 0; v < V; ++v) dot_u += step.unigram[v] * (1.0 - s) * keep * dloss_dprobs[v];
  for (std::size_t v = 0; v < V; ++v) {
    grad.unigram[v] += step.unigram[v] * ((1.0 - s) * keep * dloss_dprobs[v] - dot_u);
  }

  if (step.copy_attn.empty()) return;

  // Gate.
  double ds = 0.0;
  for (std::size_t v = 0; v < V; ++v) ds += keep * dloss_dprobs[v] * (step.copy_dist[v] - step.unigram[v]);
  const double dg = ds * s * (1.0 - s);
  for (std::size_t k = 0; k < kGateFeatureCount; ++k) grad.gate[k] += dg * step.gate_features[k];

  // Copy attention: dL/dc_j = s * keep * G[token_j], then the softmax Jacobian.
  const std::size_t P = step.copy_attn.size();
  double dot_c = 0.0;
  for (std::size_t j = 0; j < P; ++j) {
    dot_c += step.copy_attn[j] * s * keep * dloss_dprobs[static_cast<std::size_t>(step.copy_tokens[j])];
  }
  for (std::size_t j = 0; j < P; ++j) {
    const double gc = s * keep * dloss_dprobs[static_cast<std::size_t>(step.copy_tokens[j])];
    const double da = step.copy_attn[j] * (gc - dot_c);
    if (da == 0.0) continue;
    for (std::size_t k = 0; k < kCopyFeatureCount; ++k) grad.copy[k] += da * step.copy_features[j][k];
  }
}

std::vector<double> CopyMixturePolicy::accumulate_weighted_grad(const Prompt& prompt,
                                                                std::span<const TokenId> tokens,
                                                                std::span<const double> weights,
                                                                PolicyParameters& grad) const {
  if (weights.size() != tokens.size()) throw ConfigError("accumulate_weighted_grad: weight count mismatch");
  if (!grad.same_layout(params_)) throw ConfigError("accumulate_weighted_grad: gradient layout mismatch");
  vocab_.check(tokens);
  std::vector<double> logprobs;
  logprobs.reserve(tokens.size());
  std::vector<double> upstream(static_cast<std::size_t>(vocab_.size()), 0.0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const StepForward step = forward(prompt, tokens.first(t));
    const auto y = static_cast<std::size_t>(tokens[t]);
    logprobs.push_back(std::log(step.probs[y]));
    if (weights[t] == 0.0) continue;
    upstream[y] = weights[t] / step.probs[y];
    backward(step, upstream, grad);
    upstream[y] = 0.0;
  }
  return logprobs;
}

PolicyParameters CopyMixturePolicy::grad_log_prob(const Prompt& prompt,
                                                  std::span<const TokenId> tokens) const {
  PolicyParameters grad = PolicyParameters::zeros(vocab_.size());
  std::vector<double> ones(tokens.size(), 1.0);
  accumulate_weighted_grad(prompt, tokens, ones, grad);
  return grad;
}

PolicyParameters random_parameters(const Vocabulary& vocab, std::uint64_t seed, double scale,
                                   double eos_bias) {
  PolicyParameters p = PolicyParameters::zeros(vocab.size());
  Rng rng = Rng(seed).split("init", 0);
  for (double& v : p.gate) v = scale * rng.normal();
  for (double& v : p.unigram) v = scale * rng.normal();
  for (double& v : p.copy) v = scale * rng.normal();
  p.unigram[static_cast<std::size_t>(vocab.eos())] += eos_bias;
  p.version = "init-" + std::to_string(seed);
  return p;
}

}  // namespace groundrl
