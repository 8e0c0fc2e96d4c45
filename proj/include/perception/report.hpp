#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perception/perception.hpp"
#include "perception/uncertainty.hpp"

namespace perception {

nlohmann::ordered_json loss_json(const LossBreakdown &loss);
nlohmann::ordered_json training_log_json(const TrainedModel &model, const nlohmann::ordered_json &config_echo);
nlohmann::ordered_json system_report_json(const SystemReport &report, const nlohmann::ordered_json &config_echo);

/// id,p_generated,p_reference,c,m,w with 17 significant digits.
std::string scores_csv(const SystemReport &report);

std::string format_double(double value);

/// Writes `text` to `path` in binary mode; throws InputError on failure.
void write_text(const std::filesystem::path &path, const std::string &text);

// ---------------------------------------------------------------------------
// Graded-corruption benchmark

struct TierResult {
    std::string name;
    std::optional<double> level; // empty for the fresh-draw tier
    double p_sys = 0.0;
    std::vector<double> bleu; // mean sentence BLEU-1..4
};

struct CorrelationResult {
    std::string metric;
    std::optional<double> spearman; // empty when undefined
    bool degenerate = false;
};

struct BenchReport {
    std::uint64_t seed = 0;
    std::vector<TierResult> tiers;
    std::vector<CorrelationResult> correlations; // against corruption level
    std::size_t best_epoch = 0;
    double dev_mean_p_reference = 0.0;
};

nlohmann::ordered_json bench_json(const BenchReport &report, const nlohmann::ordered_json &config_echo);
std::string bench_csv(const BenchReport &report);

} // namespace perception
