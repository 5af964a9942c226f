// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale Direct Preference Optimization.
//
// The policy is a linear softmax over a finite candidate set of responses:
//
//   log pi(r | ctx) = theta . phi(ctx, r) - logsumexp_k theta . phi(ctx, k)
//
// phi hashes tokens into `dim` buckets (see featurize). For a preference pair
// with preferred response c and disfavored response d,
//
//   f    = beta * ((log pi_theta(c) - log pi_ref(c)) - (log pi_theta(d) - log pi_ref(d)))
//   loss = mean over the batch of -log sigmoid(f) = softplus(-f)
//
// and since the normalizers cancel in the difference of score gradients,
//
//   grad = -(beta / B) * sum sigmoid(-f) * (phi(c) - phi(d)).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scl/corpus.hpp"
#include "scl/prefset.hpp"

namespace scl {

// Feature hashing: tokens are maximal runs of ASCII alphanumerics or bytes
// >= 0x80, lowercased. Features are
//   "r\x1f" + t            count of response token t
//   "x\x1f" + c + "\x1f" + t   1 for each distinct (context token, response token)
// hashed with 64-bit FNV-1a and reduced modulo dim.
inline constexpr std::string_view kFeatureHashId = "fnv1a64-mod/unigram+cross/1";
inline constexpr std::size_t kDefaultFeatureDim = 4096;

std::uint64_t fnv1a64(std::string_view bytes);
std::vector<std::string> tokenize(std::string_view text);

// Sorted by index, indices unique.
using SparseFeatures = std::vector<std::pair<std::uint32_t, double>>;

SparseFeatures featurize(std::string_view context, std::string_view response, std::size_t dim);

// Question, choice lines, and the image reference for path/url images.
std::string context_text(const MCQSample& sample);
std::string context_text(const PreferencePair& pair);

class ToyPolicy {
 public:
  explicit ToyPolicy(std::size_t dim = kDefaultFeatureDim) : weights_(dim, 0.0) {}
  explicit ToyPolicy(std::vector<double> weights) : weights_(std::move(weights)) {}

  std::size_t dim() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  double score(const SparseFeatures& phi) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  std::vector<double> weights_;
};

// Frozen copy of the policy weights at the start of training.
class ReferencePolicy {
 public:
  explicit ReferencePolicy(const ToyPolicy& policy) : policy_(policy) {}
  const ToyPolicy& policy() const { return policy_; }
  std::size_t dim() const { return policy_.dim(); }

 private:
  const ToyPolicy policy_;
};

// Log-softmax of scores over `candidates`. Throws DataError when `response` is
// not one of them.
double log_prob(const ToyPolicy& policy, std::string_view context, std::string_view response,
                std::span<const std::string> candidates);

// Log-softmax of pre-computed candidate features.
std::vector<double> log_probs(const ToyPolicy& policy, std::span<const SparseFeatures> candidates);

// A pair featurized once: candidates[0] preferred, candidates[1] disfavored,
// then distractors.
struct PreparedPair {
  std::vector<SparseFeatures> candidates;
};

PreparedPair prepare_pair(const PreferencePair& pair, std::size_t dim, std::span<const std::string> distractors = {});
std::vector<PreparedPair> prepare_pairs(std::span<const PreferencePair> pairs, std::size_t dim,
                                        std::span<const std::string> distractors = {});

double dpo_margin(const ToyPolicy& theta, const ReferencePolicy& ref, const PreparedPair& pair, double beta);
double dpo_margin(const ToyPolicy& theta, const ReferencePolicy& ref, const PreferencePair& pair, double beta,
                  std::span<const std::string> distractors = {});

// softplus(x) = log(1 + e^x), stable for large |x|.
double softplus(double x);
double sigmoid(double x);

double dpo_loss(const ToyPolicy& theta, const ReferencePolicy& ref, std::span<const PreparedPair> batch, double beta);
double dpo_loss(const ToyPolicy& theta, const ReferencePolicy& ref, std::span<const PreferencePair> batch,
                double beta, std::span<const std::string> distractors = {});

std::vector<double> dpo_gradient(const ToyPolicy& theta, const ReferencePolicy& ref,
                                 std::span<const PreparedPair> batch, double beta);
std::vector<double> dpo_gradient(const ToyPolicy& theta, const ReferencePolicy& ref,
                                 std::span<const PreferencePair> batch, double beta,
                                 std::span<const std::string> distractors = {});

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double h);
std::vector<double> finite_diff_gradient(const ToyPolicy& theta, const ReferencePolicy& ref,
                                         std::span<const PreparedPair> batch, double beta, double h);

struct DPOConfig {
  double beta = 0.1;
  double learning_rate = 0.1;
  int epochs = 3;
  int batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t dim = kDefaultFeatureDim;
  // Initial weights are uniform in [-init_scale, init_scale].
  double init_scale = 1e-3;
  // Extra candidates in every pair's normalization set.
  std::vector<std::string> distractors;

  bool operator==(const DPOConfig&) const = default;
};

// Throws UsageError on a non-positive beta, learning rate, epoch count, batch
// size or dim, or a negative init_scale.
void validate_config(const DPOConfig& config);

ToyPolicy initial_policy(const DPOConfig& config);

struct PairMargin {
  std::string sample_id;
  double margin = 0.0;
};

struct TrainReport {
  double initial_loss = 0.0;
  // Full-dataset mean loss after each epoch.
  std::vector<double> epoch_losses;
  std::vector<PairMargin> margins;
  double positive_margin_fraction = 0.0;
  std::size_t steps = 0;
};

struct TrainResult {
  ToyPolicy policy;
  ReferencePolicy reference;
  TrainReport report;
};

// Mini-batch gradient descent from initial_policy(config); the reference is a
// frozen copy of that starting point. Deterministic in (set, config).
TrainResult train(const SelfCorSet& set, const DPOConfig& config);

// "The answer is <label>. <text>." for every choice.
std::vector<std::string> choice_candidates(const MCQSample& sample);
// Label whose candidate has the highest log-probability (first on ties).
std::string predict(const ToyPolicy& policy, const MCQSample& sample);
// Percentage of samples predicted correctly. Throws DataError when empty.
double policy_accuracy(const ToyPolicy& policy, std::span<const MCQSample> samples);

// Policy file: a JSON object with format, dim, hash id, seed, config echo and
// the weight vector (shortest round-trip decimal form).
void write_policy(const ToyPolicy& policy, const DPOConfig& config, const std::filesystem::path& path);
std::string serialize_policy(const ToyPolicy& policy, const DPOConfig& config);
std::pair<ToyPolicy, DPOConfig> parse_policy(std::string_view text);
std::pair<ToyPolicy, DPOConfig> read_policy(const std::filesystem::path& path);

std::string serialize_train_report(const TrainReport& report);

}  // namespace scl
