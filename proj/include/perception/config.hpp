#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perception/corpus.hpp"
#include "perception/featurizer.hpp"
#include "perception/perception.hpp"

namespace perception {

struct DataConfig {
    CorpusKind kind = CorpusKind::conditional;
    std::string train;
    std::string dev;
    std::string test;
    double train_frac = 0.8;
    double dev_frac = 0.1;
    std::size_t references_per_generation = 4;
};

struct SynthConfig {
    Grammar grammar = Grammar::corrupt_grammar;
    CorpusKind kind = CorpusKind::conditional;
    std::size_t n = 600;
    PerturbationKind corruption = PerturbationKind::word_substitute;
    double level = 0.4;
};

struct PerturbConfig {
    PerturbationKind kind = PerturbationKind::word_substitute;
    double level = 0.2;
};

struct BenchConfig {
    std::size_t n_train = 600;
    std::size_t n_dev = 100;
    std::size_t n_test = 200;
    std::vector<double> levels{0.0, 0.1, 0.2, 0.3, 0.4};
    double train_level = 0.4;
    PerturbationKind corruption = PerturbationKind::word_substitute;
    bool include_fresh = true;
};

/// Everything a run needs. Every key has a default; the effective values are
/// echoed into each JSON artifact via to_json().
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out = "out";
    FeatureConfig features;
    Hyperparams hyper;
    WeightMode weight_mode = WeightMode::literal;
    DataConfig data;
    SynthConfig synth;
    PerturbConfig perturb;
    BenchConfig bench;

    EvalOptions eval_options() const { return {hyper.mc_passes, weight_mode, data.references_per_generation}; }
};

/// Flat TOML subset: `key = value` lines with dotted keys, optional
/// `[table]` headers that prefix the following keys, `#` comments, and
/// values that are strings, integers, floats, booleans or one-line arrays.
/// Returns raw value text keyed by the full dotted key.
std::map<std::string, std::string> parse_flat_toml(std::istream &in, const std::string &source = "<config>");

/// Sets one dotted key from its raw TOML (or bare command-line) value.
/// Unknown keys and ill-typed values raise ValidationError.
void apply_setting(RunConfig &config, const std::string &key, const std::string &raw);

RunConfig load_config(const std::filesystem::path &path);
void apply_config_file(RunConfig &config, const std::filesystem::path &path);

/// Throws ValidationError if any section is inconsistent.
void validate(const RunConfig &config);

/// Flat, ordered, dotted-key view of the config.
nlohmann::ordered_json to_json(const RunConfig &config);

/// The same view rendered as TOML.
std::string to_toml(const RunConfig &config);

std::vector<std::string> config_keys();

} // namespace perception
