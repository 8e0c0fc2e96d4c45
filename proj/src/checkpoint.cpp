#include "perception/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "perception/error.hpp"

namespace perception {

std::string hex64(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(value));
    return buf;
}

namespace {

nlohmann::ordered_json layer_json(const DenseLayer &layer) {
    nlohmann::ordered_json j;
    j["rows"] = layer.weight.rows();
    j["cols"] = layer.weight.cols();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) row.push_back(layer.weight(r, c));
        rows.push_back(std::move(row));
    }
    j["weight"] = std::move(rows);
    j["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    return j;
}

DenseLayer layer_from_json(const nlohmann::json &j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto &w = j.at("weight");
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(w.size()) != rows ||
        static_cast<Eigen::Index>(bias.size()) != rows)
        throw CompatibilityError("checkpoint layer shape is inconsistent");
    DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto &row = w.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw CompatibilityError("checkpoint row length mismatch");
        for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        layer.bias[r] = bias[static_cast<std::size_t>(r)];
    }
    return layer;
}

nlohmann::ordered_json feature_json(const FeatureConfig &f) {
    nlohmann::ordered_json j;
    j["dim_per_segment"] = f.dim_per_segment;
    j["word_ngram_min"] = f.word_ngrams.min;
    j["word_ngram_max"] = f.word_ngrams.max;
    j["char_ngram_min"] = f.char_ngrams.min;
    j["char_ngram_max"] = f.char_ngrams.max;
    j["hash_seed"] = f.hash_seed;
    return j;
}

FeatureConfig feature_from_json(const nlohmann::json &j) {
    FeatureConfig f;
    f.dim_per_segment = j.at("dim_per_segment").get<std::size_t>();
    f.word_ngrams = {j.at("word_ngram_min").get<std::size_t>(), j.at("word_ngram_max").get<std::size_t>()};
    f.char_ngrams = {j.at("char_ngram_min").get<std::size_t>(), j.at("char_ngram_max").get<std::size_t>()};
    f.hash_seed = j.at("hash_seed").get<std::uint64_t>();
    return f;
}

} // namespace

nlohmann::ordered_json checkpoint_json(const TrainedModel &model, const nlohmann::ordered_json &config_echo) {
    nlohmann::ordered_json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["feature_config"] = feature_json(model.features);
    j["feature_config_hash"] = hex64(config_hash(model.features));
    j["input_dim"] = model.params.input_dim();
    j["hidden_dims"] = model.params.hidden_dims();
    j["dropout_rate"] = model.params.dropout_rate;
    j["seed"] = model.seed;
    j["best_epoch"] = model.log.best_epoch;
    nlohmann::ordered_json trunk = nlohmann::ordered_json::array();
    for (const auto &layer : model.params.trunk) trunk.push_back(layer_json(layer));
    j["trunk"] = std::move(trunk);
    j["score_head"] = layer_json(model.params.score_head);
    j["confidence_head"] = layer_json(model.params.confidence_head);
    j["config"] = config_echo;
    return j;
}

TrainedModel model_from_json(const nlohmann::json &doc) {
    try {
        if (doc.at("format").get<std::string>() != kCheckpointFormat)
            throw CompatibilityError("not a perception checkpoint");
        if (doc.at("version").get<int>() != kCheckpointVersion)
            throw CompatibilityError("unsupported checkpoint version " + doc.at("version").dump());
        TrainedModel model;
        model.features = feature_from_json(doc.at("feature_config"));
        if (doc.at("feature_config_hash").get<std::string>() != hex64(config_hash(model.features)))
            throw CompatibilityError("checkpoint feature hash does not match its feature config");
        model.seed = doc.at("seed").get<std::uint64_t>();
        model.log.best_epoch = doc.at("best_epoch").get<std::size_t>();
        for (const auto &layer : doc.at("trunk")) model.params.trunk.push_back(layer_from_json(layer));
        model.params.score_head = layer_from_json(doc.at("score_head"));
        model.params.confidence_head = layer_from_json(doc.at("confidence_head"));
        model.params.dropout_rate = doc.at("dropout_rate").get<double>();
        model.hyper.dropout_rate = model.params.dropout_rate;
        model.hyper.hidden_dims = model.params.hidden_dims();
        try {
            validate(model.params);
        } catch (const ValidationError &e) {
            throw CompatibilityError(std::string("checkpoint is inconsistent: ") + e.what());
        }
        if (model.params.input_dim() != model.features.input_dim())
            throw CompatibilityError("checkpoint input dimension does not match its feature config");
        return model;
    } catch (const nlohmann::json::exception &e) {
        throw CompatibilityError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path &path, const TrainedModel &model,
                     const nlohmann::ordered_json &config_echo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
    out << checkpoint_json(model, config_echo).dump() << '\n';
}

TrainedModel load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw CompatibilityError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return model_from_json(doc);
}

TrainedModel load_checkpoint(const std::filesystem::path &path, const FeatureConfig &features) {
    TrainedModel model = load_checkpoint(path);
    check_compatible(model, features);
    return model;
}

} // namespace perception
