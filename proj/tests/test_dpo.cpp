// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>

#include "gradient_check.hpp"
#include "scl/dpo.hpp"
#include "scl/errors.hpp"
#include "support.hpp"

using namespace scl;
using scl::testing::max_relative_error;
using scl::testing::random_instance;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

SparseFeatures one_hot(std::uint32_t i) { return {{i, 1.0}}; }

std::vector<double> big_log_softmax(const ToyPolicy& policy, const std::vector<SparseFeatures>& cands) {
  std::vector<Big> scores;
  for (const auto& phi : cands) {
    Big s = 0;
    for (const auto& [i, v] : phi) s += Big(policy.weights()[i]) * Big(v);
    scores.push_back(s);
  }
  Big sum = 0;
  for (const auto& s : scores) sum += exp(s);
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(static_cast<double>(s - log(sum)));
  return out;
}

double big_softplus(double x) { return static_cast<double>(log1p(exp(Big(x)))); }

// Four one-hot candidates; theta puts probability e/4 on the first, 1/(4e) on
// the second, and splits the rest, while the reference stays uniform. The
// log-ratios are therefore exactly +1 and -1.
struct ClosedForm {
  ToyPolicy theta = ToyPolicy(std::size_t{4});
  ToyPolicy ref = ToyPolicy(std::size_t{4});
  PreparedPair pair{{one_hot(0), one_hot(1), one_hot(2), one_hot(3)}};
  ClosedForm() {
    const double e = std::numbers::e;
    const double rest = (1.0 - (e + 1.0 / e) / 4.0) / 2.0;
    const double p[4] = {e / 4.0, 1.0 / (4.0 * e), rest, rest};
    for (int i = 0; i < 4; ++i) theta.weights()[i] = std::log(p[i]);
  }
};

SelfCorSet small_set() { return synthetic_selfcorset(2, 3); }

}  // namespace

TEST(Features, TokenizeLowercasesAlnumRuns) {
  EXPECT_EQ(tokenize("The answer is **B**. Dark-brown!"),
            (std::vector<std::string>{"the", "answer", "is", "b", "dark", "brown"}));
  EXPECT_TRUE(tokenize("  ...  ").empty());
}

TEST(Features, FnvKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Features, SortedUniqueInRange) {
  const auto phi = featurize("What color is the frog?", "The answer is A. green. green", 64);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    EXPECT_LT(phi[i].first, 64u);
    if (i) EXPECT_LT(phi[i - 1].first, phi[i].first);
  }
  double unigram_total = 0.0;
  for (const auto& [i, v] : featurize("", "green green frog", 4096)) unigram_total += v;
  EXPECT_EQ(unigram_total, 3.0);
  EXPECT_THROW(featurize("a", "b", 0), UsageError);
}

TEST(LogProb, UniformAtZeroWeights) {
  const std::vector<std::string> cands{"a", "b", "c", "d"};
  const ToyPolicy zero(128);
  for (const auto& c : cands) EXPECT_DOUBLE_EQ(log_prob(zero, "ctx", c, cands), std::log(0.25));
  const std::vector<std::string> one{"only"};
  ToyPolicy w(128);
  w.weights()[5] = 3.0;
  EXPECT_EQ(log_prob(w, "ctx", "only", one), 0.0);
  EXPECT_THROW(log_prob(zero, "ctx", "z", cands), DataError);
}

TEST(LogProb, MatchesHighPrecisionSoftmax) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Xoshiro256 rng(seed);
    std::vector<double> w(48);
    for (auto& x : w) x = rng.uniform(-4.0, 4.0);
    const ToyPolicy policy(w);
    std::vector<SparseFeatures> cands;
    for (int k = 0; k < 4; ++k) cands.push_back(scl::testing::random_features(48, rng));
    const auto got = log_probs(policy, cands);
    const auto want = big_log_softmax(policy, cands);
    double mass = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_NEAR(got[k], want[k], 1e-12);
      mass += std::exp(got[k]);
    }
    EXPECT_NEAR(mass, 1.0, 1e-9);
  }
}

TEST(LogProb, StableForLargeScores) {
  ToyPolicy w(std::vector<double>{1000.0, 999.0});
  const auto lp = log_probs(w, std::vector<SparseFeatures>{one_hot(0), one_hot(1)});
  EXPECT_TRUE(std::isfinite(lp[0]) && std::isfinite(lp[1]));
  EXPECT_NEAR(lp[0] - lp[1], 1.0, 1e-12);
}

TEST(Margin, ClosedFormValues) {
  ClosedForm cf;
  const ReferencePolicy ref(cf.ref);
  EXPECT_NEAR(dpo_margin(cf.theta, ref, cf.pair, 1.0), 2.0, 1e-12);
  EXPECT_NEAR(dpo_margin(cf.theta, ref, cf.pair, 2.0), 4.0, 1e-12);
  EXPECT_NEAR(dpo_loss(cf.theta, ref, std::vector<PreparedPair>{cf.pair}, 1.0), 0.1269280110429725, 1e-14);
  EXPECT_NEAR(dpo_loss(cf.theta, ref, std::vector<PreparedPair>{cf.pair}, 2.0), 0.01814992791780974, 1e-14);
  EXPECT_NEAR(softplus(-2.0), big_softplus(-2.0), 1e-16);
  EXPECT_NEAR(softplus(-4.0), big_softplus(-4.0), 1e-17);
}

TEST(Margin, ZeroWhenThetaIsReference) {
  const auto set = small_set();
  const auto theta = initial_policy(DPOConfig{});
  const ReferencePolicy ref(theta);
  for (const auto& p : set.pairs)
    for (double beta : {0.01, 0.1, 1.0, 7.5}) EXPECT_EQ(dpo_margin(theta, ref, p, beta), 0.0);
  EXPECT_THROW(dpo_margin(theta, ref, set.pairs[0], 0.0), UsageError);
}

TEST(Margin, LinearInBeta) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(32, 1, seed);
    const ReferencePolicy ref(inst.reference);
    const double unit = dpo_margin(inst.theta, ref, inst.batch[0], 1.0);
    for (double beta : {0.1, 0.5, 3.0}) EXPECT_NEAR(dpo_margin(inst.theta, ref, inst.batch[0], beta), beta * unit, 1e-12);
  }
}

TEST(Loss, AnchorIsLn2) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto inst = random_instance(64, 1 + seed % 16, seed);
    const ReferencePolicy ref(inst.theta);
    EXPECT_NEAR(dpo_loss(inst.theta, ref, inst.batch, inst.beta), std::numbers::ln2, 1e-12);
  }
}

TEST(Loss, PositiveAndDecreasingInMargin) {
  Xoshiro256 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-30.0, 30.0), b = rng.uniform(-30.0, 30.0);
    EXPECT_GT(softplus(-a), 0.0);
    if (a < b) EXPECT_GT(softplus(-a), softplus(-b));
    EXPECT_NEAR(softplus(-a), big_softplus(-a), 1e-15 * std::max(1.0, std::abs(a)));
  }
  EXPECT_TRUE(std::isfinite(softplus(800.0)));
  EXPECT_GT(softplus(-700.0), 0.0);
}

TEST(Loss, EmptyBatchRejected) {
  const ToyPolicy theta(8);
  const ReferencePolicy ref(theta);
  EXPECT_THROW(dpo_loss(theta, ref, std::span<const PreparedPair>{}, 0.1), DataError);
  EXPECT_THROW(dpo_gradient(theta, ref, std::span<const PreparedPair>{}, 0.1), DataError);
}

TEST(Gradient, SymmetricPairIsZero) {
  const ToyPolicy theta(std::vector<double>{0.3, -0.2, 0.5, 0.1});
  const ReferencePolicy ref(theta);
  const SparseFeatures same{{0, 1.0}, {2, 2.0}};
  PreparedPair p{{same, same, one_hot(3)}};
  for (double g : dpo_gradient(theta, ref, std::vector<PreparedPair>{p}, 0.1)) EXPECT_EQ(g, 0.0);
}

TEST(Gradient, DoublesWithBetaAtReference) {
  const auto set = small_set();
  const auto theta = initial_policy(DPOConfig{.dim = 256});
  const ReferencePolicy ref(theta);
  const auto g1 = dpo_gradient(theta, ref, std::span<const PreferencePair>(set.pairs), 0.1);
  const auto g2 = dpo_gradient(theta, ref, std::span<const PreferencePair>(set.pairs), 0.2);
  bool any = false;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_EQ(g2[i], 2.0 * g1[i]);
    any |= g1[i] != 0.0;
  }
  EXPECT_TRUE(any);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = random_instance(32, 5, 100 + seed);
    const ReferencePolicy ref(inst.reference);
    const auto analytic = dpo_gradient(inst.theta, ref, inst.batch, inst.beta);
    const auto numeric = finite_diff_gradient(inst.theta, ref, inst.batch, inst.beta, 1e-5);
    EXPECT_LT(max_relative_error(analytic, numeric), 1e-5) << "seed " << seed;
  }
}

TEST(Gradient, RealPairsMatchFiniteDifferences) {
  const auto set = small_set();
  DPOConfig cfg;
  cfg.dim = 64;
  cfg.init_scale = 0.5;
  const auto theta = initial_policy(cfg);
  cfg.seed = 1;
  const ReferencePolicy ref(initial_policy(cfg));
  const auto batch = prepare_pairs(set.pairs, 64);
  const auto analytic = dpo_gradient(theta, ref, batch, 0.5);
  const auto numeric = finite_diff_gradient(theta, ref, batch, 0.5, 1e-5);
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-5);
}

TEST(FiniteDiff, QuadraticAndConstant) {
  // f(x) = sum a_i x_i^2 + b_i x_i, derivative 2 a_i x_i + b_i
  const std::vector<double> a{1.5, -2.0, 0.25}, b{0.5, 3.0, -1.0}, x{0.7, -1.1, 2.0};
  auto f = [&](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += a[i] * v[i] * v[i] + b[i] * v[i];
    return s;
  };
  const auto g = finite_diff_gradient(f, x, 1e-4);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(g[i], 2 * a[i] * x[i] + b[i], 1e-8);

  const auto z = finite_diff_gradient([](std::span<const double>) { return 0.6931; }, x, 1e-5);
  for (double v : z) EXPECT_EQ(v, 0.0);

  // candidates never touch coordinates 4..7
  const ToyPolicy theta(std::vector<double>(8, 0.1));
  const ReferencePolicy ref(ToyPolicy(8));
  PreparedPair p{{one_hot(0), one_hot(1)}};
  const auto fd = finite_diff_gradient(theta, ref, std::vector<PreparedPair>{p}, 0.1, 1e-5);
  for (std::size_t i = 4; i < 8; ++i) EXPECT_EQ(fd[i], 0.0);
  EXPECT_THROW(finite_diff_gradient(f, x, 0.0), UsageError);
}

TEST(Gradient, SmallStepIncreasesMargin) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = random_instance(32, 1, 500 + seed);
    const ReferencePolicy ref(inst.reference);
    const double before = dpo_margin(inst.theta, ref, inst.batch[0], inst.beta);
    const auto g = dpo_gradient(inst.theta, ref, inst.batch, inst.beta);
    double norm = 0.0;
    for (double v : g) norm += v * v;
    if (norm == 0.0) continue;
    ToyPolicy stepped = inst.theta;
    for (std::size_t i = 0; i < g.size(); ++i) stepped.weights()[i] -= 1e-3 * g[i];
    EXPECT_GT(dpo_margin(stepped, ref, inst.batch[0], inst.beta), before) << seed;
  }
}

TEST(Train, ConfigValidation) {
  EXPECT_THROW(validate_config(DPOConfig{.epochs = 0}), UsageError);
  EXPECT_THROW(validate_config(DPOConfig{.beta = 0.0}), UsageError);
  EXPECT_THROW(validate_config(DPOConfig{.learning_rate = -1.0}), UsageError);
  EXPECT_THROW(validate_config(DPOConfig{.batch_size = 0}), UsageError);
  EXPECT_THROW(train(SelfCorSet{}, DPOConfig{}), DataError);
}

TEST(Train, SmallLearningRateImprovesEveryPair) {
  const auto set = synthetic_selfcorset(20, 1);
  ASSERT_EQ(set.pairs.size(), 200u);
  DPOConfig cfg;
  cfg.beta = 0.1;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 3;
  const auto result = train(set, cfg);
  EXPECT_NEAR(result.report.initial_loss, std::numbers::ln2, 1e-12);
  ASSERT_EQ(result.report.epoch_losses.size(), 3u);
  EXPECT_LT(result.report.epoch_losses.back(), std::numbers::ln2);
  EXPECT_GE(result.report.positive_margin_fraction, 0.95);
  for (double l : result.report.epoch_losses) EXPECT_GT(l, 0.0);
  EXPECT_EQ(result.report.steps, 3u * 25u);
}

TEST(Train, DeterministicWithFrozenReference) {
  const auto set = synthetic_selfcorset(3, 2);
  DPOConfig cfg;
  cfg.dim = 512;
  cfg.learning_rate = 1.0;
  const auto a = train(set, cfg);
  const auto b = train(set, cfg);
  EXPECT_EQ(a.policy, b.policy);
  const auto init = initial_policy(cfg);
  EXPECT_EQ(a.reference.policy(), init);
  EXPECT_NE(a.policy, init);
  cfg.seed = 9;
  EXPECT_NE(train(set, cfg).policy, a.policy);
}

TEST(Train, ToyPolicyLearnsSyntheticWorld) {
  const auto set = synthetic_selfcorset(20, 4);
  const auto eval = synthetic_corpus(200, 77);
  DPOConfig cfg;
  cfg.learning_rate = 30.0;
  cfg.epochs = 30;
  const auto before = policy_accuracy(initial_policy(cfg), eval);
  const auto result = train(set, cfg);
  EXPECT_GT(policy_accuracy(result.policy, eval), before);
}

TEST(PolicyFile, RoundTripExact) {
  DPOConfig cfg;
  cfg.dim = 64;
  cfg.distractors = {"The answer is E."};
  const auto policy = initial_policy(cfg);
  const auto [back, back_cfg] = parse_policy(serialize_policy(policy, cfg));
  EXPECT_EQ(back, policy);
  EXPECT_EQ(back_cfg, cfg);
  scl::testing::TempDir dir;
  write_policy(policy, cfg, dir / "p.json");
  EXPECT_EQ(read_policy(dir / "p.json").first, policy);
  EXPECT_THROW(parse_policy("{\"format\":\"other\"}"), DataError);
}

TEST(Predict, ArgmaxOverChoiceCandidates) {
  const auto s = scl::testing::abcd_sample("q1", "C");
  EXPECT_EQ(choice_candidates(s)[2], "The answer is C. Two.");
  // zero weights tie everywhere, the first label wins
  EXPECT_EQ(predict(ToyPolicy(64), s), "A");
  ToyPolicy w(4096);
  for (const auto& [i, v] : featurize(context_text(s), choice_candidates(s)[3], 4096)) w.weights()[i] += 1.0;
  EXPECT_EQ(predict(w, s), "D");
  EXPECT_THROW(policy_accuracy(w, std::span<const MCQSample>{}), DataError);
}
