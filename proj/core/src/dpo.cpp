// SPDX-License-Identifier: Apache-2.0

#include "scl/dpo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "codec.hpp"
#include "scl/io.hpp"
#include "scl/rng.hpp"

namespace scl {

using codec::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur += (u < 0x80) ? static_cast<char>(std::tolower(u)) : c;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

SparseFeatures featurize(std::string_view context, std::string_view response, std::size_t dim) {
  if (dim == 0) throw UsageError("feature dim must be positive");
  std::map<std::uint32_t, double> acc;
  auto bucket = [dim](std::string_view key) { return static_cast<std::uint32_t>(fnv1a64(key) % dim); };

  const auto resp_tokens = tokenize(response);
  for (const auto& t : resp_tokens) acc[bucket("r\x1f" + t)] += 1.0;

  const auto ctx_tokens = tokenize(context);
  const std::set<std::string> ctx_distinct(ctx_tokens.begin(), ctx_tokens.end());
  const std::set<std::string> resp_distinct(resp_tokens.begin(), resp_tokens.end());
  for (const auto& c : ctx_distinct)
    for (const auto& t : resp_distinct) acc[bucket("x\x1f" + c + "\x1f" + t)] += 1.0;

  return SparseFeatures(acc.begin(), acc.end());
}

namespace {
std::string context_from(std::string_view question, const std::vector<Choice>& choices, const ImageRef& image) {
  std::string ctx(question);
  for (const auto& c : choices) {
    ctx += '\n';
    ctx += c.label;
    ctx += ". ";
    ctx += c.text;
  }
  if (image.kind != ImageKind::Base64) {
    ctx += '\n';
    ctx += image.value;
  }
  return ctx;
}

double dot(std::span<const double> w, const SparseFeatures& phi) {
  double s = 0.0;
  for (const auto& [i, v] : phi) s += w[i] * v;
  return s;
}

void check_dims(const ToyPolicy& theta, const ReferencePolicy& ref) {
  if (theta.dim() != ref.dim()) throw UsageError("policy and reference dimensions differ");
}
}  // namespace

std::string context_text(const MCQSample& sample) {
  return context_from(sample.question, sample.choices, sample.image);
}

std::string context_text(const PreferencePair& pair) { return context_from(pair.question, pair.choices, pair.image); }

double ToyPolicy::score(const SparseFeatures& phi) const { return dot(weights_, phi); }

std::vector<double> log_probs(const ToyPolicy& policy, std::span<const SparseFeatures> candidates) {
  if (candidates.empty()) throw DataError("log_prob needs at least one candidate");
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& phi : candidates) {
    for (const auto& [i, v] : phi)
      if (i >= policy.dim()) throw UsageError("feature index exceeds policy dimension");
    scores.push_back(policy.score(phi));
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  const double lse = m + std::log(sum);
  for (double& s : scores) s -= lse;
  return scores;
}

double log_prob(const ToyPolicy& policy, std::string_view context, std::string_view response,
                std::span<const std::string> candidates) {
  auto it = std::find(candidates.begin(), candidates.end(), response);
  if (it == candidates.end()) throw DataError("response is not among the candidates");
  std::vector<SparseFeatures> feats;
  feats.reserve(candidates.size());
  for (const auto& c : candidates) feats.push_back(featurize(context, c, policy.dim()));
  return log_probs(policy, feats)[static_cast<std::size_t>(it - candidates.begin())];
}

PreparedPair prepare_pair(const PreferencePair& pair, std::size_t dim, std::span<const std::string> distractors) {
  const auto ctx = context_text(pair);
  PreparedPair p;
  p.candidates.reserve(2 + distractors.size());
  p.candidates.push_back(featurize(ctx, pair.preferred, dim));
  p.candidates.push_back(featurize(ctx, pair.disfavored, dim));
  for (const auto& d : distractors) p.candidates.push_back(featurize(ctx, d, dim));
  return p;
}

std::vector<PreparedPair> prepare_pairs(std::span<const PreferencePair> pairs, std::size_t dim,
                                        std::span<const std::string> distractors) {
  std::vector<PreparedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(prepare_pair(p, dim, distractors));
  return out;
}

double dpo_margin(const ToyPolicy& theta, const ReferencePolicy& ref, const PreparedPair& pair, double beta) {
  if (!(beta > 0.0)) throw UsageError("beta must be positive");
  check_dims(theta, ref);
  if (pair.candidates.size() < 2) throw DataError("prepared pair needs preferred and disfavored candidates");
  const auto lp_theta = log_probs(theta, pair.candidates);
  const auto lp_ref = log_probs(ref.policy(), pair.candidates);
  return beta * ((lp_theta[0] - lp_ref[0]) - (lp_theta[1] - lp_ref[1]));
}

double dpo_margin(const ToyPolicy& theta, const ReferencePolicy& ref, const PreferencePair& pair, double beta,
                  std::span<const std::string> distractors) {
  return dpo_margin(theta, ref, prepare_pair(pair, theta.dim(), distractors), beta);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dpo_loss(const ToyPolicy& theta, const ReferencePolicy& ref, std::span<const PreparedPair> batch, double beta) {
  if (batch.empty()) throw DataError("dpo_loss needs a non-empty batch");
  double total = 0.0;
  for (const auto& p : batch) total += softplus(-dpo_margin(theta, ref, p, beta));
  return total / static_cast<double>(batch.size());
}

double dpo_loss(const ToyPolicy& theta, const ReferencePolicy& ref, std::span<const PreferencePair> batch,
                double beta, std::span<const std::string> distractors) {
  const auto prepared = prepare_pairs(batch, theta.dim(), distractors);
  return dpo_loss(theta, ref, prepared, beta);
}

std::vector<double> dpo_gradient(const ToyPolicy& theta, const ReferencePolicy& ref,
                                 std::span<const PreparedPair> batch, double beta) {
  if (batch.empty()) throw DataError("dpo_gradient needs a non-empty batch");
  std::vector<double> grad(theta.dim(), 0.0);
  const double scale = beta / static_cast<double>(batch.size());
  for (const auto& p : batch) {
    const double f = dpo_margin(theta, ref, p, beta);
    const double coef = -scale * sigmoid(-f);
    for (const auto& [i, v] : p.candidates[0]) grad[i] += coef * v;
    for (const auto& [i, v] : p.candidates[1]) grad[i] -= coef * v;
  }
  return grad;
}

std::vector<double> dpo_gradient(const ToyPolicy& theta, const ReferencePolicy& ref,
                                 std::span<const PreferencePair> batch, double beta,
                                 std::span<const std::string> distractors) {
  const auto prepared = prepare_pairs(batch, theta.dim(), distractors);
  return dpo_gradient(theta, ref, prepared, beta);
}

std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double h) {
  if (!(h > 0.0)) throw UsageError("finite-difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::vector<double> finite_diff_gradient(const ToyPolicy& theta, const ReferencePolicy& ref,
                                         std::span<const PreparedPair> batch, double beta, double h) {
  auto loss_at = [&](std::span<const double> w) {
    return dpo_loss(ToyPolicy(std::vector<double>(w.begin(), w.end())), ref, batch, beta);
  };
  return finite_diff_gradient(loss_at, theta.weights(), h);
}

void validate_config(const DPOConfig& c) {
  if (!(c.beta > 0.0)) throw UsageError("dpo.beta must be positive");
  if (!(c.learning_rate > 0.0)) throw UsageError("dpo.learning_rate must be positive");
  if (c.epochs < 1) throw UsageError("dpo.epochs must be a positive integer");
  if (c.batch_size < 1) throw UsageError("dpo.batch_size must be a positive integer");
  if (c.dim < 1) throw UsageError("dpo.dim must be positive");
  if (!(c.init_scale >= 0.0)) throw UsageError("dpo.init_scale must be non-negative");
}

ToyPolicy initial_policy(const DPOConfig& config) {
  validate_config(config);
  Xoshiro256 rng(config.seed);
  std::vector<double> w(config.dim);
  for (auto& x : w) x = rng.uniform(-config.init_scale, config.init_scale);
  return ToyPolicy(std::move(w));
}

TrainResult train(const SelfCorSet& set, const DPOConfig& config) {
  validate_config(config);
  if (set.pairs.empty()) throw DataError("cannot train on an empty SelfCorSet");

  ToyPolicy theta = initial_policy(config);
  const ReferencePolicy ref(theta);
  const auto prepared = prepare_pairs(set.pairs, config.dim, config.distractors);

  TrainReport report;
  report.initial_loss = dpo_loss(theta, ref, prepared, config.beta);

  // Separate stream from the initializer so changing dim does not reorder batches.
  Xoshiro256 order_rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto bs = static_cast<std::size_t>(config.batch_size);
  std::vector<PreparedPair> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t k = start; k < std::min(start + bs, order.size()); ++k) batch.push_back(prepared[order[k]]);
      const auto grad = dpo_gradient(theta, ref, batch, config.beta);
      auto w = theta.weights();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * grad[i];
      ++report.steps;
    }
    report.epoch_losses.push_back(dpo_loss(theta, ref, prepared, config.beta));
  }

  std::size_t positive = 0;
  report.margins.reserve(prepared.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const double f = dpo_margin(theta, ref, prepared[i], config.beta);
    if (f > 0.0) ++positive;
    report.margins.push_back(PairMargin{set.pairs[i].sample_id, f});
  }
  report.positive_margin_fraction = static_cast<double>(positive) / static_cast<double>(prepared.size());
  return TrainResult{std::move(theta), ref, std::move(report)};
}

std::vector<std::string> choice_candidates(const MCQSample& sample) {
  std::vector<std::string> out;
  out.reserve(sample.choices.size());
  for (const auto& c : sample.choices) out.push_back("The answer is " + c.label + ". " + c.text + ".");
  return out;
}

std::string predict(const ToyPolicy& policy, const MCQSample& sample) {
  if (sample.choices.empty()) throw DataError("sample \"" + sample.id + "\" has no choices");
  const auto ctx = context_text(sample);
  std::vector<SparseFeatures> feats;
  for (const auto& c : choice_candidates(sample)) feats.push_back(featurize(ctx, c, policy.dim()));
  const auto lp = log_probs(policy, feats);
  const auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
  return sample.choices[best].label;
}

double policy_accuracy(const ToyPolicy& policy, std::span<const MCQSample> samples) {
  if (samples.empty()) throw DataError("accuracy over an empty sample set");
  std::size_t correct = 0;
  for (const auto& s : samples)
    if (predict(policy, s) == s.answer_key) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
}

namespace {
constexpr std::string_view kPolicyFormat = "scl-policy/1";

json config_to_json(const DPOConfig& c) {
  return json{{"beta", c.beta},           {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
              {"batch_size", c.batch_size}, {"seed", c.seed},                 {"dim", c.dim},
              {"init_scale", c.init_scale}, {"distractors", c.distractors}};
}

DPOConfig config_from_json(const json& j) {
  DPOConfig c;
  c.beta = codec::require(j, "beta").get<double>();
  c.learning_rate = codec::require(j, "learning_rate").get<double>();
  c.epochs = codec::require(j, "epochs").get<int>();
  c.batch_size = codec::require(j, "batch_size").get<int>();
  c.seed = codec::require(j, "seed").get<std::uint64_t>();
  c.dim = codec::require(j, "dim").get<std::size_t>();
  c.init_scale = codec::require(j, "init_scale").get<double>();
  c.distractors = codec::require(j, "distractors").get<std::vector<std::string>>();
  return c;
}
}  // namespace

std::string serialize_policy(const ToyPolicy& policy, const DPOConfig& config) {
  json j{{"format", std::string(kPolicyFormat)},
         {"dim", policy.dim()},
         {"hash", std::string(kFeatureHashId)},
         {"seed", config.seed},
         {"config", config_to_json(config)},
         {"weights", std::vector<double>(policy.weights().begin(), policy.weights().end())}};
  return j.dump() + "\n";
}

void write_policy(const ToyPolicy& policy, const DPOConfig& config, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_policy(policy, config));
}

std::pair<ToyPolicy, DPOConfig> parse_policy(std::string_view text) {
  auto j = codec::parse_line(text, "policy file");
  try {
    if (j.value("format", "") != kPolicyFormat) throw DataError("not a policy file");
    if (codec::require_string(j, "hash") != kFeatureHashId)
      throw DataError("policy uses an unknown feature hash \"" + j["hash"].get<std::string>() + "\"");
    auto weights = codec::require(j, "weights").get<std::vector<double>>();
    const auto dim = codec::require(j, "dim").get<std::size_t>();
    if (weights.size() != dim) throw DataError("weight vector length does not match dim");
    auto config = config_from_json(codec::require(j, "config"));
    return {ToyPolicy(std::move(weights)), std::move(config)};
  } catch (const json::exception& e) {
    throw DataError(std::string("policy file: ") + e.what());
  }
}

std::pair<ToyPolicy, DPOConfig> read_policy(const std::filesystem::path& path) {
  return parse_policy(read_file(path));
}

std::string serialize_train_report(const TrainReport& r) {
  json margins = json::array();
  for (const auto& m : r.margins) margins.push_back(json{{"sample_id", m.sample_id}, {"margin", m.margin}});
  json j{{"initial_loss", r.initial_loss},
         {"epoch_losses", r.epoch_losses},
         {"final_loss", r.epoch_losses.empty() ? r.initial_loss : r.epoch_losses.back()},
         {"positive_margin_fraction", r.positive_margin_fraction},
         {"steps", r.steps},
         {"margins", std::move(margins)}};
  return j.dump(2) + "\n";
}

}  // namespace scl
