// SPDX-License-Identifier: Apache-2.0
//
// scl-synth: writes a synthetic corpus, a scripted-model fixture and a
// matching pipeline config, ready for `scl --config <dir>/config.json ...`.

#include <CLI11.hpp>

#include <iostream>

#include "scl/errors.hpp"
#include "scl/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic corpus and scripted fixture"};
  std::string out_dir = "synthetic";
  std::size_t samples = 500;
  std::size_t eval_count = 150;
  std::uint64_t seed = 1;
  scl::ScriptedModelProfile profile;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--samples", samples, "Number of samples");
  app.add_option("--eval-count", eval_count, "eval_count written to config.json");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--k-turns", profile.k_turns, "Refinement turns in the fixture")->check(CLI::Range(1, 16));
  app.add_option("--initial-accuracy", profile.initial_accuracy)->check(CLI::Range(0.0, 1.0));
  app.add_option("--keep-correct", profile.keep_correct)->check(CLI::Range(0.0, 1.0));
  app.add_option("--fix-wrong", profile.fix_wrong)->check(CLI::Range(0.0, 1.0));
  app.add_option("--unparseable", profile.unparseable)->check(CLI::Range(0.0, 1.0));
  CLI11_PARSE(app, argc, argv);

  try {
    scl::write_synthetic_world(out_dir, samples, eval_count, seed, profile);
    std::cout << "wrote " << samples << " samples to " << out_dir << "/\n";
  } catch (const scl::Error& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(e.kind());
  }
  return 0;
}
