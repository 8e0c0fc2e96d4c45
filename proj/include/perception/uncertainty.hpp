#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "perception/tinynet.hpp"

namespace perception {

/// literal: w_i proportional to 1 / (c_i + m_i), the printed aggregation rule.
/// confidence: w_i proportional to (c_i + m_i), which up-weights samples the
/// critic is confident about.
enum class WeightMode { literal, confidence };

std::string_view to_string(WeightMode mode);
WeightMode parse_weight_mode(std::string_view name);

struct ScoreRecord {
    std::string sample_id;
    double p_generated = 0.0;
    double p_reference = 0.0;
    double c = 1.0; // data confidence
    double m = 1.0; // model confidence
    double w = 0.0;
};

struct SystemReport {
    double p_sys = 0.0;
    std::vector<ScoreRecord> records;
    WeightMode weight_mode = WeightMode::literal;
    std::size_t mc_passes = 0;
    std::size_t references_per_generation = 1;
    std::uint64_t seed = 0;
};

/// p_generated from T forward passes in mc_dropout mode; pass t uses seed
/// derive_seed(seed, "mc_pass", t).
std::vector<double> mc_dropout_scores(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                                      const Eigen::Ref<const Eigen::VectorXd> &ref, std::size_t passes,
                                      std::uint64_t seed);

/// Population variance, shifted by the first value so that identical inputs
/// give exactly zero.
double population_variance(std::span<const double> values);

/// m = 1 - Var(p_generated) over `passes` dropout draws. Requires passes >= 2.
double model_confidence(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                        const Eigen::Ref<const Eigen::VectorXd> &ref, std::size_t passes, std::uint64_t seed);

std::vector<double> sample_weights(std::span<const double> c, std::span<const double> m, WeightMode mode);

struct PartialRecord {
    double p_generated = 0.0;
    double c = 1.0;
    double m = 1.0;
};

struct SystemScore {
    double p_sys = 0.0;
    std::vector<double> weights;
};

/// Weighted mean of p_generated, clamped into [min, max] of the inputs so
/// rounding can never push it outside the convex hull.
SystemScore system_score(std::span<const PartialRecord> records, WeightMode mode);

} // namespace perception
