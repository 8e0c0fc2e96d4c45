#pragma once

#include <filesystem>
#include <iosfwd>

#include "perception/config.hpp"
#include "perception/perception.hpp"
#include "perception/report.hpp"

namespace perception {

/// Trains on data.train (and data.dev, or a seeded split of data.train when
/// no dev file is given) and writes <out>/checkpoint.json and
/// <out>/training_log.json.
TrainedModel cmd_train(const RunConfig &config, std::ostream &out);

/// Scores a test corpus with a checkpoint; writes <out>/report.json and
/// <out>/scores.csv and prints P_sys with six decimals.
SystemReport cmd_score(const RunConfig &config, const std::filesystem::path &checkpoint,
                       const std::filesystem::path &test_path, std::ostream &out);

/// Trains one critic on synthetic references vs generations corrupted at
/// bench.train_level, then scores graded test tiers (one per bench.levels
/// entry, sharing references) plus an optional fresh-draw tier with the
/// critic and BLEU-1..4, and reports each metric's Spearman correlation with
/// the corruption level.
BenchReport run_bench(const RunConfig &config);
BenchReport cmd_bench(const RunConfig &config, std::ostream &out);

Corpus cmd_synth(const RunConfig &config, const std::filesystem::path &output, std::ostream &out);
Corpus cmd_perturb(const RunConfig &config, const std::filesystem::path &input, const std::filesystem::path &output,
                   std::ostream &out);

} // namespace perception
