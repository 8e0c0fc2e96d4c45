#include "perception/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "perception/error.hpp"
#include "perception/perception.hpp"
#include "perception/rng.hpp"

namespace perception {

std::string_view to_string(WeightMode mode) { return mode == WeightMode::literal ? "literal" : "confidence"; }

WeightMode parse_weight_mode(std::string_view name) {
    if (name == "literal") return WeightMode::literal;
    if (name == "confidence") return WeightMode::confidence;
    throw ValidationError("unknown weight mode '" + std::string(name) + "'");
}

std::vector<double> mc_dropout_scores(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                                      const Eigen::Ref<const Eigen::VectorXd> &ref, std::size_t passes,
                                      std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(passes);
    for (std::size_t t = 0; t < passes; ++t) {
        ForwardTrace trace = forward_pair(params, gen, ref, ForwardMode::mc_dropout, derive_seed(seed, "mc_pass", t));
        out.push_back(pair_softmax(trace.raw_score_gen, trace.raw_score_ref).p_generated);
    }
    return out;
}

double population_variance(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double anchor = values.front();
    double mean = 0.0;
    for (double v : values) mean += v - anchor;
    mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) {
        const double d = (v - anchor) - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(values.size());
}

double model_confidence(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                        const Eigen::Ref<const Eigen::VectorXd> &ref, std::size_t passes, std::uint64_t seed) {
    if (passes < 2) throw ValidationError("model confidence needs at least 2 dropout passes");
    const std::vector<double> scores = mc_dropout_scores(params, gen, ref, passes, seed);
    return 1.0 - population_variance(scores);
}

std::vector<double> sample_weights(std::span<const double> c, std::span<const double> m, WeightMode mode) {
    if (c.size() != m.size()) throw ValidationError("confidence lists differ in length");
    if (c.empty()) throw ValidationError("cannot weight an empty set of samples");
    std::vector<double> raw(c.size());
    double total = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double s = c[i] + m[i];
        if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("c + m must be positive and finite");
        raw[i] = mode == WeightMode::literal ? 1.0 / s : s;
        total += raw[i];
    }
    for (double &w : raw) w /= total;
    return raw;
}

SystemScore system_score(std::span<const PartialRecord> records, WeightMode mode) {
    if (records.empty()) throw ValidationError("system score needs at least one record");
    std::vector<double> c, m;
    c.reserve(records.size());
    m.reserve(records.size());
    double lo = records.front().p_generated, hi = lo;
    for (const auto &r : records) {
        c.push_back(r.c);
        m.push_back(r.m);
        lo = std::min(lo, r.p_generated);
        hi = std::max(hi, r.p_generated);
    }
    SystemScore out;
    out.weights = sample_weights(c, m, mode);
    double acc = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) acc += out.weights[i] * records[i].p_generated;
    out.p_sys = std::clamp(acc, lo, hi);
    return out;
}

} // namespace perception
