#include "perception/featurizer.hpp"

#include <bit>

#include "perception/corpus.hpp"
#include "perception/error.hpp"
#include "perception/rng.hpp"

namespace perception {

namespace {

void validate_range(const NgramRange &r, const char *name) {
    if (r.enabled() && (r.min < 1 || r.min > r.max))
        throw ValidationError(std::string(name) + " range must satisfy 1 <= min <= max (or max = 0 to disable)");
}

} // namespace

void validate(const FeatureConfig &config) {
    if (config.dim_per_segment < 64 || !std::has_single_bit(config.dim_per_segment))
        throw ValidationError("feature.dim_per_segment must be a power of two >= 64");
    validate_range(config.word_ngrams, "feature.word_ngrams");
    validate_range(config.char_ngrams, "feature.char_ngrams");
}

std::string canonical_string(const FeatureConfig &config) {
    return "dim=" + std::to_string(config.dim_per_segment) + ";word=" + std::to_string(config.word_ngrams.min) + ".." +
           std::to_string(config.word_ngrams.max) + ";char=" + std::to_string(config.char_ngrams.min) + ".." +
           std::to_string(config.char_ngrams.max) + ";seed=" + std::to_string(config.hash_seed) + ";hash=fnv1a64+splitmix64";
}

std::uint64_t config_hash(const FeatureConfig &config) { return fnv1a64(canonical_string(config)); }

HashedFeature hash_feature(std::string_view key, std::size_t dim, std::uint64_t hash_seed) {
    const std::uint64_t h = splitmix64(fnv1a64(key) ^ splitmix64(hash_seed));
    return {static_cast<std::size_t>(h & (dim - 1)), (h >> 63) ? -1.0 : 1.0};
}

Eigen::VectorXd featurize_segment(std::string_view text, const FeatureConfig &config) {
    validate(config);
    const std::size_t dim = config.dim_per_segment;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    const std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) return v;

    auto add = [&](std::string_view key) {
        HashedFeature f = hash_feature(key, dim, config.hash_seed);
        v[static_cast<Eigen::Index>(f.index)] += f.sign;
    };

    std::string key;
    if (config.word_ngrams.enabled()) {
        for (std::size_t n = config.word_ngrams.min; n <= config.word_ngrams.max; ++n) {
            for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                key = "w";
                for (std::size_t j = 0; j < n; ++j) {
                    if (j) key += ' ';
                    key += tokens[i + j];
                }
                add(key);
            }
        }
    }
    if (config.char_ngrams.enabled()) {
        const std::string joined = join_tokens(tokens);
        for (std::size_t n = config.char_ngrams.min; n <= config.char_ngrams.max; ++n) {
            for (std::size_t i = 0; i + n <= joined.size(); ++i) {
                key = "c";
                key.append(joined, i, n);
                add(key);
            }
        }
    }

    const double norm = v.norm();
    // Signed collisions can cancel everything out; keep the zero vector then.
    if (norm > 0.0) v /= norm;
    return v;
}

Eigen::VectorXd featurize_pair(std::string_view context, std::string_view candidate, const FeatureConfig &config) {
    const auto dim = static_cast<Eigen::Index>(config.dim_per_segment);
    Eigen::VectorXd out(2 * dim);
    out.head(dim) = featurize_segment(context, config);
    out.tail(dim) = featurize_segment(candidate, config);
    return out;
}

} // namespace perception
