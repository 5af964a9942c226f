// SPDX-License-Identifier: Apache-2.0

#include "scl/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <string_view>

#include "scl/dpo.hpp"
#include "scl/io.hpp"
#include "scl/prefset.hpp"
#include "scl/rng.hpp"

namespace scl {

namespace {

struct Thing {
  std::string_view name;
  std::string_view color;
};

constexpr std::array<std::string_view, 10> kColors = {"red",    "orange", "yellow", "green", "blue",
                                                      "purple", "brown",  "black",  "white", "pink"};

// One object per color, so the answer is a function of the object alone.
constexpr std::array<Thing, 10> kThings = {{
    {"apple", "red"},  {"carrot", "orange"}, {"banana", "yellow"}, {"frog", "green"}, {"sky", "blue"},
    {"grape", "purple"}, {"bear", "brown"},   {"crow", "black"},    {"snow", "white"}, {"pig", "pink"},
}};

constexpr std::string_view kQuestionTemplate = "What color is the %s in the image?";

std::string object_of(const MCQSample& s) {
  for (const auto& t : kThings)
    if (s.question.find(std::string(" ") + std::string(t.name)) != std::string::npos) return std::string(t.name);
  return "object";
}

}  // namespace

std::vector<MCQSample> synthetic_corpus(std::size_t count, std::uint64_t seed, std::string source) {
  Xoshiro256 rng(seed);
  std::vector<MCQSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& thing = kThings[rng.bounded(kThings.size())];
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    char question[160];
    std::snprintf(question, sizeof question, std::string(kQuestionTemplate).c_str(), std::string(thing.name).c_str());

    std::vector<std::string_view> colors{thing.color};
    while (colors.size() < 4) {
      const auto c = kColors[rng.bounded(kColors.size())];
      if (std::find(colors.begin(), colors.end(), c) == colors.end()) colors.push_back(c);
    }
    std::vector<std::size_t> order{0, 1, 2, 3};
    shuffle(order, rng);
    const bool numeric = rng.bounded(8) == 0;

    MCQSample s;
    s.id = id;
    s.source = source;
    s.question = question;
    s.image = ImageRef{ImageKind::Url, "https://example.invalid/synthetic/" + s.id + ".png"};
    for (std::size_t k = 0; k < 4; ++k) {
      std::string label = numeric ? std::string(1, static_cast<char>('0' + k)) : std::string(1, static_cast<char>('A' + k));
      s.choices.push_back(Choice{label, std::string(colors[order[k]])});
      if (order[k] == 0) s.answer_key = label;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_response(const MCQSample& sample, Outcome outcome, std::uint64_t variant, int turn) {
  const auto object = object_of(sample);
  const std::string preamble = turn == 0 ? "" : "Upon reviewing my previous answer and the image again, ";
  if (outcome == Outcome::Unparseable) {
    return preamble + (turn == 0 ? "I" : "i") + " cannot determine the color of the " + object +
           " from this image with confidence.";
  }
  const Choice* pick = nullptr;
  if (outcome == Outcome::Correct) {
    pick = sample.find_choice(sample.answer_key);
  } else {
    std::vector<const Choice*> wrong;
    for (const auto& c : sample.choices)
      if (c.label != sample.answer_key) wrong.push_back(&c);
    pick = wrong[variant % wrong.size()];
  }
  const auto& l = pick->label;
  const auto& t = pick->text;
  std::string body;
  switch ((variant / 3) % 4) {
    case 0: body = "looking at the image, the " + object + " appears " + t + ". The answer is **" + l + ". " + t + "**."; break;
    case 1: body = "the " + object + " in the picture is " + t + ".\n" + l + ". " + t; break;
    case 2: body = "the " + object + " is clearly " + t + ". Final answer: " + l; break;
    default: body = "i believe the " + object + " is " + t + ", so the correct answer is " + l + ". " + t + "."; break;
  }
  if (turn == 0) body[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(body[0])));
  return preamble + body;
}

std::vector<Outcome> outcomes_for(TransitionType type) {
  switch (type) {
    case TransitionType::Type1: return {Outcome::Correct, Outcome::Correct};
    case TransitionType::Type2: return {Outcome::Wrong, Outcome::Correct};
    case TransitionType::Type3: return {Outcome::Correct, Outcome::Wrong};
    case TransitionType::Type4: return {Outcome::Wrong, Outcome::Wrong};
    case TransitionType::Undetermined: return {Outcome::Correct, Outcome::Unparseable};
  }
  return {};
}

ScriptedFixture fixture_from_outcomes(const std::vector<MCQSample>& samples,
                                      const std::vector<std::vector<Outcome>>& outcomes, std::uint64_t seed) {
  ScriptedFixture fixture;
  for (std::size_t i = 0; i < samples.size() && i < outcomes.size(); ++i) {
    Xoshiro256 rng(seed ^ fnv1a64(samples[i].id));
    // one phrasing style per sample across all turns; the wrong pick varies per turn
    const std::uint64_t style = rng.bounded(4);
    for (std::size_t t = 0; t < outcomes[i].size(); ++t) {
      const int turn = static_cast<int>(t);
      const std::uint64_t variant = style * 3 + rng.bounded(3);
      fixture.emplace(FixtureKey{samples[i].id, turn}, render_response(samples[i], outcomes[i][t], variant, turn));
    }
  }
  return fixture;
}

ScriptedFixture synthetic_fixture(const std::vector<MCQSample>& samples, const ScriptedModelProfile& p,
                                  std::uint64_t seed) {
  std::vector<std::vector<Outcome>> outcomes;
  outcomes.reserve(samples.size());
  for (const auto& s : samples) {
    Xoshiro256 rng(seed ^ fnv1a64("trajectory:" + s.id));
    std::vector<Outcome> traj;
    bool correct = rng.uniform() < p.initial_accuracy;
    for (int t = 0; t <= p.k_turns; ++t) {
      if (t > 0) correct = correct ? rng.uniform() < p.keep_correct : rng.uniform() < p.fix_wrong;
      const bool garbled = rng.uniform() < p.unparseable;
      traj.push_back(garbled ? Outcome::Unparseable : (correct ? Outcome::Correct : Outcome::Wrong));
    }
    outcomes.push_back(std::move(traj));
  }
  return fixture_from_outcomes(samples, outcomes, seed);
}

SelfCorSet synthetic_selfcorset(std::size_t pairs_per_object, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  SelfCorSet set;
  set.meta.model_id = "scripted-synthetic";
  set.meta.seed = seed;
  for (std::size_t o = 0; o < kThings.size(); ++o) {
    const auto& thing = kThings[o];
    const auto confusion = kThings[(o + 3) % kThings.size()].color;
    for (std::size_t k = 0; k < pairs_per_object; ++k) {
      // positions cycle so every label is preferred and disfavored equally often
      const std::size_t key_pos = k % 4;
      const std::size_t wrong_pos = (key_pos + 1 + (k / 4) % 3) % 4;
      std::vector<std::string_view> fillers;
      for (const auto c : kColors)
        if (c != thing.color && c != confusion) fillers.push_back(c);
      std::vector<std::size_t> order(fillers.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order, rng);

      MCQSample s;
      char id[32];
      std::snprintf(id, sizeof id, "pair-%05zu", set.pairs.size());
      s.id = id;
      s.source = "synthetic";
      char question[160];
      std::snprintf(question, sizeof question, std::string(kQuestionTemplate).c_str(), std::string(thing.name).c_str());
      s.question = question;
      s.image = ImageRef{ImageKind::Url, "https://example.invalid/synthetic/" + s.id + ".png"};
      std::size_t next_filler = 0;
      for (std::size_t pos = 0; pos < 4; ++pos) {
        const std::string label(1, static_cast<char>('A' + pos));
        std::string_view text;
        if (pos == key_pos) text = thing.color;
        else if (pos == wrong_pos) text = confusion;
        else text = fillers[order[next_filler++]];
        s.choices.push_back(Choice{label, std::string(text)});
      }
      s.answer_key = s.choices[key_pos].label;

      // render_response picks the (variant % 3)-th non-key choice for a wrong answer
      const std::uint64_t wrong_rank = wrong_pos < key_pos ? wrong_pos : wrong_pos - 1;
      const std::uint64_t style = rng.bounded(4);

      PreferencePair p;
      p.sample_id = s.id;
      p.source = s.source;
      p.question = s.question;
      p.image = s.image;
      p.choices = s.choices;
      p.answer_key = s.answer_key;
      p.disfavored = render_response(s, Outcome::Wrong, style * 3 + wrong_rank, 0);
      p.preferred = render_response(s, Outcome::Correct, style * 3, 1);
      p.transition = TransitionType::Type2;
      p.preferred_origin = PreferredOrigin::RR;
      p.model_id = set.meta.model_id;
      set.pairs.push_back(std::move(p));
    }
  }
  set.meta.counts.by_type[static_cast<std::size_t>(TransitionType::Type2)] = set.pairs.size();
  return set;
}

std::filesystem::path write_synthetic_world(const std::filesystem::path& dir, std::size_t samples,
                                            std::size_t eval_count, std::uint64_t seed,
                                            const ScriptedModelProfile& profile) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  const auto corpus = synthetic_corpus(samples, seed);
  write_file_atomic(dir / "corpus.jsonl", serialize_corpus(corpus));
  write_file_atomic(dir / "fixture.jsonl", serialize_fixture(synthetic_fixture(corpus, profile, seed)));
  const std::string config = R"({
  "corpora": [{"path": "corpus.jsonl", "eval_count": )" + std::to_string(eval_count) + R"(}],
  "backend": {"kind": "scripted", "fixture": "fixture.jsonl"},
  "generation": {"model_id": "scripted-synthetic", "temperature": 0, "max_tokens": 512},
  "prompt_id": "VP1",
  "k_turns": )" + std::to_string(profile.k_turns) + R"(,
  "allow_extended_turns": )" + (profile.k_turns > kMaxTurns ? "true" : "false") + R"(,
  "parallelism": 4,
  "split_seed": 42,
  "subset_seed": 7,
  "dpo": {"beta": 0.1, "learning_rate": 30, "epochs": 30, "batch_size": 8, "seed": 0, "dim": 4096, "init_scale": 0.001},
  "sweep": {"p_grid": [0, 0.2, 0.4, 0.6, 0.8, 1.0]},
  "output_dir": "out"
}
)";
  write_file_atomic(dir / "config.json", config);
  return dir / "config.json";
}

}  // namespace scl
