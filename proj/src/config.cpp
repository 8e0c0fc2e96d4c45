#include "perception/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "perception/error.hpp"

namespace perception {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string strip_comment(const std::string &line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quote) {
            if (ch == '\\' && quote == '"') ++i;
            else if (ch == quote) quote = 0;
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string unquote(const std::string &key, std::string_view raw_in) {
    const std::string raw = trim(raw_in);
    if (raw.size() >= 2 && raw.front() == '\'' && raw.back() == '\'') return raw.substr(1, raw.size() - 2);
    if (raw.empty() || raw.front() != '"') return raw;
    if (raw.size() < 2 || raw.back() != '"') throw ValidationError(key + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char ch = raw[i];
        if (ch != '\\') {
            out += ch;
            continue;
        }
        if (i + 2 >= raw.size()) throw ValidationError(key + ": dangling escape");
        switch (raw[++i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: throw ValidationError(key + ": unsupported escape sequence");
        }
    }
    return out;
}

std::uint64_t to_uint(const std::string &key, const std::string &raw) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ValidationError(key + ": expected a non-negative integer, got '" + s + "'");
    return v;
}

double to_double(const std::string &key, const std::string &raw) {
    const std::string s = trim(raw);
    char *end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ValidationError(key + ": expected a number, got '" + s + "'");
    return v;
}

bool to_bool(const std::string &key, const std::string &raw) {
    const std::string s = trim(raw);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ValidationError(key + ": expected true or false, got '" + s + "'");
}

std::vector<std::string> to_list(const std::string &key, const std::string &raw) {
    const std::string s = trim(raw);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw ValidationError(key + ": expected a one-line array like [1, 2]");
    std::vector<std::string> items;
    std::string body = s.substr(1, s.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

struct Key {
    std::string name;
    std::function<void(RunConfig &, const std::string &)> set;
    std::function<nlohmann::ordered_json(const RunConfig &)> get;
};

template <class T>
Key uint_key(std::string name, T RunConfig::*section, std::size_t T::*field) {
    return {name,
            [=](RunConfig &c, const std::string &raw) { (c.*section).*field = to_uint(name, raw); },
            [=](const RunConfig &c) { return nlohmann::ordered_json((c.*section).*field); }};
}

template <class T>
Key double_key(std::string name, T RunConfig::*section, double T::*field) {
    return {name,
            [=](RunConfig &c, const std::string &raw) { (c.*section).*field = to_double(name, raw); },
            [=](const RunConfig &c) { return nlohmann::ordered_json((c.*section).*field); }};
}

template <class T>
Key string_key(std::string name, T RunConfig::*section, std::string T::*field) {
    return {name,
            [=](RunConfig &c, const std::string &raw) { (c.*section).*field = unquote(name, raw); },
            [=](const RunConfig &c) { return nlohmann::ordered_json((c.*section).*field); }};
}

template <class T, class E>
Key enum_key(std::string name, T RunConfig::*section, E T::*field, E (*parse)(std::string_view)) {
    return {name,
            [=](RunConfig &c, const std::string &raw) { (c.*section).*field = parse(unquote(name, raw)); },
            [=](const RunConfig &c) { return nlohmann::ordered_json(std::string(to_string((c.*section).*field))); }};
}

const std::vector<Key> &key_table() {
    static const std::vector<Key> keys = [] {
        std::vector<Key> k;
        k.push_back({"seed", [](RunConfig &c, const std::string &raw) { c.seed = to_uint("seed", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.seed); }});
        k.push_back({"out", [](RunConfig &c, const std::string &raw) { c.out = unquote("out", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.out); }});

        k.push_back(uint_key("feature.dim_per_segment", &RunConfig::features, &FeatureConfig::dim_per_segment));
        k.push_back({"feature.word_ngram_min",
                     [](RunConfig &c, const std::string &raw) { c.features.word_ngrams.min = to_uint("feature.word_ngram_min", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.features.word_ngrams.min); }});
        k.push_back({"feature.word_ngram_max",
                     [](RunConfig &c, const std::string &raw) { c.features.word_ngrams.max = to_uint("feature.word_ngram_max", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.features.word_ngrams.max); }});
        k.push_back({"feature.char_ngram_min",
                     [](RunConfig &c, const std::string &raw) { c.features.char_ngrams.min = to_uint("feature.char_ngram_min", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.features.char_ngrams.min); }});
        k.push_back({"feature.char_ngram_max",
                     [](RunConfig &c, const std::string &raw) { c.features.char_ngrams.max = to_uint("feature.char_ngram_max", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.features.char_ngrams.max); }});
        k.push_back({"feature.hash_seed",
                     [](RunConfig &c, const std::string &raw) { c.features.hash_seed = to_uint("feature.hash_seed", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.features.hash_seed); }});

        k.push_back({"net.hidden_dims",
                     [](RunConfig &c, const std::string &raw) {
                         c.hyper.hidden_dims.clear();
                         for (const auto &item : to_list("net.hidden_dims", raw))
                             c.hyper.hidden_dims.push_back(to_uint("net.hidden_dims", item));
                     },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.hyper.hidden_dims); }});
        k.push_back(double_key("net.dropout", &RunConfig::hyper, &Hyperparams::dropout_rate));

        k.push_back(double_key("train.lambda", &RunConfig::hyper, &Hyperparams::lambda));
        k.push_back(double_key("train.beta", &RunConfig::hyper, &Hyperparams::beta));
        k.push_back(double_key("train.learning_rate", &RunConfig::hyper, &Hyperparams::learning_rate));
        k.push_back(double_key("train.momentum", &RunConfig::hyper, &Hyperparams::momentum));
        k.push_back(uint_key("train.epochs", &RunConfig::hyper, &Hyperparams::epochs));
        k.push_back(uint_key("train.batch_size", &RunConfig::hyper, &Hyperparams::batch_size));
        k.push_back(enum_key("train.gp_mode", &RunConfig::hyper, &Hyperparams::gp_mode, &parse_gp_mode));

        k.push_back(uint_key("uncertainty.mc_passes", &RunConfig::hyper, &Hyperparams::mc_passes));
        k.push_back({"uncertainty.weight_mode",
                     [](RunConfig &c, const std::string &raw) {
                         c.weight_mode = parse_weight_mode(unquote("uncertainty.weight_mode", raw));
                     },
                     [](const RunConfig &c) { return nlohmann::ordered_json(std::string(to_string(c.weight_mode))); }});

        k.push_back(enum_key("data.kind", &RunConfig::data, &DataConfig::kind, &parse_corpus_kind));
        k.push_back(string_key("data.train", &RunConfig::data, &DataConfig::train));
        k.push_back(string_key("data.dev", &RunConfig::data, &DataConfig::dev));
        k.push_back(string_key("data.test", &RunConfig::data, &DataConfig::test));
        k.push_back(double_key("data.train_frac", &RunConfig::data, &DataConfig::train_frac));
        k.push_back(double_key("data.dev_frac", &RunConfig::data, &DataConfig::dev_frac));
        k.push_back(uint_key("data.references_per_generation", &RunConfig::data, &DataConfig::references_per_generation));

        k.push_back(enum_key("synth.grammar", &RunConfig::synth, &SynthConfig::grammar, &parse_grammar));
        k.push_back(enum_key("synth.kind", &RunConfig::synth, &SynthConfig::kind, &parse_corpus_kind));
        k.push_back(uint_key("synth.n", &RunConfig::synth, &SynthConfig::n));
        k.push_back(enum_key("synth.corruption", &RunConfig::synth, &SynthConfig::corruption, &parse_perturbation_kind));
        k.push_back(double_key("synth.level", &RunConfig::synth, &SynthConfig::level));

        k.push_back(enum_key("perturb.kind", &RunConfig::perturb, &PerturbConfig::kind, &parse_perturbation_kind));
        k.push_back(double_key("perturb.level", &RunConfig::perturb, &PerturbConfig::level));

        k.push_back(uint_key("bench.n_train", &RunConfig::bench, &BenchConfig::n_train));
        k.push_back(uint_key("bench.n_dev", &RunConfig::bench, &BenchConfig::n_dev));
        k.push_back(uint_key("bench.n_test", &RunConfig::bench, &BenchConfig::n_test));
        k.push_back({"bench.levels",
                     [](RunConfig &c, const std::string &raw) {
                         c.bench.levels.clear();
                         for (const auto &item : to_list("bench.levels", raw))
                             c.bench.levels.push_back(to_double("bench.levels", item));
                     },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.bench.levels); }});
        k.push_back(double_key("bench.train_level", &RunConfig::bench, &BenchConfig::train_level));
        k.push_back(enum_key("bench.corruption", &RunConfig::bench, &BenchConfig::corruption, &parse_perturbation_kind));
        k.push_back({"bench.include_fresh",
                     [](RunConfig &c, const std::string &raw) { c.bench.include_fresh = to_bool("bench.include_fresh", raw); },
                     [](const RunConfig &c) { return nlohmann::ordered_json(c.bench.include_fresh); }});
        return k;
    }();
    return keys;
}

} // namespace

std::map<std::string, std::string> parse_flat_toml(std::istream &in, const std::string &source) {
    std::map<std::string, std::string> out;
    std::string line, table;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string text = trim(strip_comment(line));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) throw ParseError(source, lineno, "malformed table header");
            table = trim(text.substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        if (key.empty() || value.empty()) throw ParseError(source, lineno, "expected 'key = value'");
        if (!table.empty()) key = table + "." + key;
        if (!out.emplace(key, value).second) throw ParseError(source, lineno, "duplicate key '" + key + "'");
    }
    return out;
}

void apply_setting(RunConfig &config, const std::string &key, const std::string &raw) {
    for (const Key &k : key_table()) {
        if (k.name == key) {
            k.set(config, raw);
            return;
        }
    }
    throw ValidationError("unknown config key '" + key + "'");
}

void apply_config_file(RunConfig &config, const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path.string() + "'");
    for (const auto &[key, raw] : parse_flat_toml(in, path.string())) apply_setting(config, key, raw);
}

RunConfig load_config(const std::filesystem::path &path) {
    RunConfig config;
    apply_config_file(config, path);
    return config;
}

void validate(const RunConfig &config) {
    validate(config.features);
    validate(config.hyper);
    if (!(config.data.train_frac >= 0.0 && config.data.dev_frac >= 0.0 &&
          config.data.train_frac + config.data.dev_frac < 1.0))
        throw ValidationError("data.train_frac + data.dev_frac must be < 1");
    if (config.data.references_per_generation == 0) throw ValidationError("data.references_per_generation must be >= 1");
    if (!(config.synth.level >= 0.0 && config.synth.level <= 1.0)) throw ValidationError("synth.level must lie in [0, 1]");
    if (!(config.perturb.level >= 0.0 && config.perturb.level <= 1.0))
        throw ValidationError("perturb.level must lie in [0, 1]");
    for (double l : config.bench.levels)
        if (!(l >= 0.0 && l <= 1.0)) throw ValidationError("bench.levels entries must lie in [0, 1]");
    if (!(config.bench.train_level >= 0.0 && config.bench.train_level <= 1.0))
        throw ValidationError("bench.train_level must lie in [0, 1]");
}

nlohmann::ordered_json to_json(const RunConfig &config) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const Key &k : key_table()) out[k.name] = k.get(config);
    return out;
}

std::string to_toml(const RunConfig &config) {
    std::string out;
    for (const Key &k : key_table()) out += k.name + " = " + k.get(config).dump() + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> names;
    for (const Key &k : key_table()) names.push_back(k.name);
    return names;
}

} // namespace perception
