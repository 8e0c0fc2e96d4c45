#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "perception/perception.hpp"

namespace perception {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char *kCheckpointFormat = "perception-checkpoint";

/// JSON checkpoint: format tag, version, feature config and its hash, layer
/// shapes, 64-bit weights (shortest round-trip decimal), dropout rate, seed
/// and the run config echo. Loading is exact: saved weights come back
/// bit-for-bit.
nlohmann::ordered_json checkpoint_json(const TrainedModel &model, const nlohmann::ordered_json &config_echo);
TrainedModel model_from_json(const nlohmann::json &doc);

void save_checkpoint(const std::filesystem::path &path, const TrainedModel &model,
                     const nlohmann::ordered_json &config_echo);
TrainedModel load_checkpoint(const std::filesystem::path &path);

/// load_checkpoint() followed by check_compatible(model, features).
TrainedModel load_checkpoint(const std::filesystem::path &path, const FeatureConfig &features);

std::string hex64(std::uint64_t value);

} // namespace perception
