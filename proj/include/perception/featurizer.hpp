#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace perception {

struct NgramRange {
    std::size_t min = 1;
    std::size_t max = 1;

    /// A range with max == 0 disables that n-gram family.
    bool enabled() const { return max > 0; }
    bool operator==(const NgramRange &) const = default;
};

struct FeatureConfig {
    std::size_t dim_per_segment = 512;
    NgramRange word_ngrams{1, 2};
    NgramRange char_ngrams{3, 4};
    std::uint64_t hash_seed = 0;

    std::size_t input_dim() const { return 2 * dim_per_segment; }
    bool operator==(const FeatureConfig &) const = default;
};

/// Throws ValidationError unless dim_per_segment is a power of two >= 64 and
/// every enabled range satisfies 1 <= min <= max.
void validate(const FeatureConfig &config);

/// Stable fingerprint of the fields that determine feature layout; stored in
/// checkpoints so a model is never applied to vectors it was not trained on.
std::uint64_t config_hash(const FeatureConfig &config);
std::string canonical_string(const FeatureConfig &config);

struct HashedFeature {
    std::size_t index;
    double sign;
};

/// Bucket and sign for one n-gram key:
///   h = splitmix64(fnv1a64(key) ^ splitmix64(hash_seed))
///   index = h & (dim - 1), sign = +1 if the top bit of h is clear else -1.
/// Word n-gram keys are "w" + tokens joined by ' '; character n-gram keys are
/// "c" + the raw bytes of the window over the space-joined token string.
HashedFeature hash_feature(std::string_view key, std::size_t dim, std::uint64_t hash_seed);

/// Signed hashed counts of all configured word and character n-grams,
/// L2-normalized. Empty (or all-whitespace) text maps to the zero vector.
Eigen::VectorXd featurize_segment(std::string_view text, const FeatureConfig &config);

/// [featurize_segment(context); featurize_segment(candidate)].
Eigen::VectorXd featurize_pair(std::string_view context, std::string_view candidate, const FeatureConfig &config);

} // namespace perception
