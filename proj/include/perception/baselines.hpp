#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perception {

enum class BleuSmoothing { none, add_one };

struct BleuConfig {
    std::size_t max_n = 4;
    BleuSmoothing smoothing = BleuSmoothing::add_one;
    bool case_fold = false;
};

struct BleuStats {
    std::vector<std::size_t> matches; // clipped n-gram matches, index n-1
    std::vector<std::size_t> totals;  // candidate n-gram counts
    std::size_t candidate_length = 0;
    std::size_t reference_length = 0; // closest reference length
};

/// Clipped counts against the per-n-gram maximum over references; the
/// effective reference length is the closest one (shorter wins ties).
BleuStats bleu_stats(std::string_view candidate, std::span<const std::string> references, std::size_t max_n,
                     bool case_fold);

/// Sentence BLEU in [0, 1]: geometric mean of modified precisions over the
/// orders 1..max_n that the candidate actually has, times the brevity
/// penalty exp(1 - r/c) when c < r.
double bleu(std::string_view candidate, std::span<const std::string> references, const BleuConfig &config);

/// Product-moment correlation with two-pass mean subtraction. Throws
/// ValidationError on mismatched or short input and NumericError when
/// either side has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// 1-based ranks, ties receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

double spearman(std::span<const double> xs, std::span<const double> ys);

} // namespace perception
