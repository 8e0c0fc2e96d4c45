#include "perception/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "perception/error.hpp"
#include "perception/rng.hpp"

namespace perception {

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); });
}

std::string read_string_field(const nlohmann::json &obj, const char *key, const std::string &source,
                              std::size_t line, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        if (required) throw ParseError(source, line, std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) throw ParseError(source, line, std::string("field '") + key + "' is not a string");
    return it->get<std::string>();
}

std::size_t ceil_count(double level, std::size_t n) {
    // The epsilon keeps products like 0.3 * 10 from rounding up to 4.
    return static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
}

} // namespace

std::string_view to_string(CorpusKind kind) {
    return kind == CorpusKind::conditional ? "conditional" : "unconditional";
}

CorpusKind parse_corpus_kind(std::string_view name) {
    if (name == "conditional") return CorpusKind::conditional;
    if (name == "unconditional") return CorpusKind::unconditional;
    throw ValidationError("unknown corpus kind '" + std::string(name) + "'");
}

void validate(const Corpus &corpus) {
    std::map<std::string_view, std::size_t> seen;
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
        const Sample &s = corpus.samples[i];
        if (blank(s.reference)) throw ValidationError("sample '" + s.id + "' has an empty reference");
        if (blank(s.generation)) throw ValidationError("sample '" + s.id + "' has an empty generation");
        if (corpus.kind == CorpusKind::unconditional && !s.context.empty())
            throw ValidationError("sample '" + s.id + "' has a context in an unconditional corpus");
        auto [it, inserted] = seen.emplace(s.id, i);
        if (!inserted)
            throw ValidationError("duplicate id '" + s.id + "' at samples " + std::to_string(it->second) +
                                  " and " + std::to_string(i));
    }
}

Corpus parse_jsonl(std::istream &in, CorpusKind kind, const std::string &source) {
    Corpus corpus;
    corpus.kind = kind;
    std::map<std::string, std::size_t> id_lines;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (blank(text)) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error &e) {
            throw ParseError(source, line, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(source, line, "expected a JSON object");

        Sample s;
        s.id = read_string_field(obj, "id", source, line, true);
        s.context = read_string_field(obj, "context", source, line, kind == CorpusKind::conditional);
        s.reference = read_string_field(obj, "reference", source, line, true);
        s.generation = read_string_field(obj, "generation", source, line, true);

        if (blank(s.reference)) throw ValidationError(source + ":" + std::to_string(line) + ": empty reference");
        if (blank(s.generation)) throw ValidationError(source + ":" + std::to_string(line) + ": empty generation");
        if (kind == CorpusKind::unconditional && !s.context.empty())
            throw ValidationError(source + ":" + std::to_string(line) +
                                  ": non-empty context in an unconditional corpus");
        auto [it, inserted] = id_lines.emplace(s.id, line);
        if (!inserted)
            throw ValidationError(source + ": duplicate id '" + s.id + "' on lines " + std::to_string(it->second) +
                                  " and " + std::to_string(line));
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

Corpus load_jsonl(const std::filesystem::path &path, CorpusKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open corpus file '" + path.string() + "'");
    return parse_jsonl(in, kind, path.string());
}

void write_jsonl(std::ostream &out, const Corpus &corpus) {
    for (const Sample &s : corpus.samples) {
        nlohmann::ordered_json obj;
        obj["id"] = s.id;
        obj["context"] = s.context;
        obj["reference"] = s.reference;
        obj["generation"] = s.generation;
        out << obj.dump() << '\n';
    }
}

std::string to_jsonl(const Corpus &corpus) {
    std::ostringstream out;
    write_jsonl(out, corpus);
    return out.str();
}

void save_jsonl(const std::filesystem::path &path, const Corpus &corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write corpus file '" + path.string() + "'");
    write_jsonl(out, corpus);
}

CorpusSplit split(const Corpus &corpus, double train_frac, double dev_frac, std::uint64_t seed) {
    if (corpus.empty()) throw ValidationError("cannot split an empty corpus");
    if (!(train_frac >= 0.0 && dev_frac >= 0.0 && train_frac + dev_frac < 1.0))
        throw ValidationError("split fractions must be non-negative with train + dev < 1");

    const std::size_t n = corpus.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n) + 1e-9));
    const auto n_dev = static_cast<std::size_t>(std::floor(dev_frac * static_cast<double>(n) + 1e-9));

    CorpusSplit out;
    out.train.kind = out.dev.kind = out.test.kind = corpus.kind;
    for (std::size_t i = 0; i < n; ++i) {
        Corpus &dst = i < n_train ? out.train : (i < n_train + n_dev ? out.dev : out.test);
        dst.samples.push_back(corpus.samples[order[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(PerturbationKind kind) {
    switch (kind) {
    case PerturbationKind::word_drop: return "word_drop";
    case PerturbationKind::word_shuffle: return "word_shuffle";
    case PerturbationKind::word_substitute: return "word_substitute";
    case PerturbationKind::truncate: return "truncate";
    }
    return "?";
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
    for (auto k : {PerturbationKind::word_drop, PerturbationKind::word_shuffle, PerturbationKind::word_substitute,
                   PerturbationKind::truncate})
        if (to_string(k) == name) return k;
    throw ValidationError("unknown perturbation kind '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string> &tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string perturb(std::string_view text, const PerturbationSpec &spec) {
    if (!(spec.level >= 0.0 && spec.level <= 1.0)) throw ValidationError("perturbation level must lie in [0, 1]");
    if (spec.level == 0.0) return std::string(text);

    std::vector<std::string> tokens = tokenize(text);
    if (tokens.empty()) throw ValidationError("cannot perturb empty text");
    const std::size_t n = tokens.size();
    Rng rng(spec.seed);

    switch (spec.kind) {
    case PerturbationKind::word_drop: {
        std::vector<std::string> kept;
        for (auto &t : tokens)
            if (!(rng.uniform() < spec.level)) kept.push_back(t);
        if (kept.empty()) kept.push_back(tokens.front());
        tokens = std::move(kept);
        break;
    }
    case PerturbationKind::word_shuffle: {
        if (n < 2) break;
        for (std::size_t s = 0, swaps = ceil_count(spec.level, n); s < swaps; ++s) {
            std::size_t i = rng.below(n - 1);
            std::swap(tokens[i], tokens[i + 1]);
        }
        break;
    }
    case PerturbationKind::word_substitute: {
        const auto &vocab = vocabulary();
        std::vector<std::size_t> positions(n);
        std::iota(positions.begin(), positions.end(), 0);
        const std::size_t steps = std::min(n, ceil_count(spec.level, n));
        for (std::size_t s = 0; s < steps; ++s) {
            std::size_t j = s + rng.below(n - s);
            std::swap(positions[s], positions[j]);
            std::string &target = tokens[positions[s]];
            auto hit = std::lower_bound(vocab.begin(), vocab.end(), target);
            if (hit != vocab.end() && *hit == target) {
                auto current = static_cast<std::size_t>(hit - vocab.begin());
                std::size_t v = rng.below(vocab.size() - 1);
                target = vocab[v >= current ? v + 1 : v];
            } else {
                target = vocab[rng.below(vocab.size())];
            }
        }
        break;
    }
    case PerturbationKind::truncate: {
        std::size_t keep = std::max<std::size_t>(1, ceil_count(1.0 - spec.level, n));
        tokens.resize(std::min(keep, n));
        break;
    }
    }
    return join_tokens(tokens);
}

Corpus perturb_generations(const Corpus &corpus, const PerturbationSpec &spec) {
    Corpus out = corpus;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        PerturbationSpec local = spec;
        local.seed = derive_seed(spec.seed, "perturb", i);
        out.samples[i].generation = perturb(out.samples[i].generation, local);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Grammar grammar) {
    switch (grammar) {
    case Grammar::ref_grammar: return "ref_grammar";
    case Grammar::near_grammar: return "near_grammar";
    case Grammar::corrupt_grammar: return "corrupt_grammar";
    }
    return "?";
}

Grammar parse_grammar(std::string_view name) {
    for (auto g : {Grammar::ref_grammar, Grammar::near_grammar, Grammar::corrupt_grammar})
        if (to_string(g) == name) return g;
    throw ValidationError("unknown grammar '" + std::string(name) + "'");
}

const GrammarSlots &grammar_slots() {
    static const GrammarSlots slots{
        {"the old farmer", "a young sailor", "the tired doctor", "a quiet teacher", "the clever fox",
         "a brave knight", "the little girl", "an angry baker", "the patient nurse", "a lonely painter",
         "the curious child", "a wise owl", "the busy mayor", "a shy student", "the grumpy cat",
         "an honest judge", "the proud chef", "a gentle giant", "the lost tourist", "a cheerful monk"},
        {"found", "painted", "carried", "repaired", "watched", "sold", "hid", "cleaned", "opened", "dropped",
         "borrowed", "built", "followed", "lifted", "burned", "tasted", "pushed", "measured", "wrapped", "guarded"},
        {"a wooden boat", "the silver key", "an old map", "the broken clock", "a red kite", "the heavy box",
         "a small garden", "the dusty book", "a warm blanket", "the iron gate", "a green bottle", "the empty basket",
         "a tall ladder", "the secret letter", "a round table", "the golden ring", "a paper lantern", "the stone bridge",
         "a fresh loaf", "the tiny bell"},
        {"near the river", "after the storm", "with great care", "before the sunrise", "under the bridge",
         "during the festival", "in the garden", "at the market", "behind the barn", "across the valley",
         "without a word", "for the village", "on the hill", "beside the fire", "through the night",
         "inside the tower", "along the coast", "after the rain", "in the morning", "by the lake"},
        "this is a story about"};
    return slots;
}

const std::vector<std::string> &vocabulary() {
    static const std::vector<std::string> vocab = [] {
        const auto &g = grammar_slots();
        std::set<std::string> words;
        for (const auto *slot : {&g.subjects, &g.verbs, &g.objects, &g.modifiers})
            for (const auto &phrase : *slot)
                for (auto &t : tokenize(phrase)) words.insert(t);
        for (auto &t : tokenize(g.context_prefix)) words.insert(t);
        return std::vector<std::string>(words.begin(), words.end());
    }();
    return vocab;
}

namespace {

std::string draw_predicate(Rng &rng) {
    const auto &g = grammar_slots();
    std::string out = g.verbs[rng.below(g.verbs.size())];
    out += ' ';
    out += g.objects[rng.below(g.objects.size())];
    out += ' ';
    out += g.modifiers[rng.below(g.modifiers.size())];
    return out;
}

} // namespace

Corpus make_synthetic(const SyntheticSpec &spec) {
    if (spec.n < 1) throw ValidationError("synthetic corpus size must be at least 1");
    if (!(spec.level >= 0.0 && spec.level <= 1.0)) throw ValidationError("corruption level must lie in [0, 1]");
    const auto &g = grammar_slots();

    Corpus corpus;
    corpus.kind = spec.kind;
    corpus.samples.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Rng ref_rng(derive_seed(spec.seed, "synth.reference", i));
        const std::string &subject = g.subjects[ref_rng.below(g.subjects.size())];

        Sample s;
        s.id = "syn-" + std::to_string(i);
        if (spec.kind == CorpusKind::conditional) s.context = g.context_prefix + " " + subject;
        s.reference = subject + " " + draw_predicate(ref_rng);

        switch (spec.grammar) {
        case Grammar::ref_grammar: s.generation = s.reference; break;
        case Grammar::near_grammar: {
            Rng gen_rng(derive_seed(spec.seed, "synth.generation", i));
            std::string gen_subject = spec.kind == CorpusKind::conditional
                                          ? subject
                                          : g.subjects[gen_rng.below(g.subjects.size())];
            s.generation = gen_subject + " " + draw_predicate(gen_rng);
            break;
        }
        case Grammar::corrupt_grammar:
            s.generation = perturb(s.reference, {spec.corruption, spec.level, derive_seed(spec.seed, "synth.corrupt", i)});
            break;
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> pair_indices(std::size_t generations, std::size_t references,
                                                   std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ValidationError("references per generation must be at least 1");
    if (k > references)
        throw ValidationError("requested " + std::to_string(k) + " references per generation but only " +
                              std::to_string(references) + " are available");
    std::vector<std::vector<std::size_t>> out(generations);
    std::vector<std::size_t> pool(references);
    for (std::size_t i = 0; i < generations; ++i) {
        std::iota(pool.begin(), pool.end(), 0);
        Rng rng(derive_seed(seed, "pair", i));
        for (std::size_t s = 0; s < k; ++s) std::swap(pool[s], pool[s + rng.below(references - s)]);
        out[i].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

std::vector<UnconditionalPairing> pair_unconditional(const std::vector<std::string> &generations,
                                                     const std::vector<std::string> &references,
                                                     std::size_t k, std::uint64_t seed) {
    auto idx = pair_indices(generations.size(), references.size(), k, seed);
    std::vector<UnconditionalPairing> out(generations.size());
    for (std::size_t i = 0; i < generations.size(); ++i) {
        out[i].generation = generations[i];
        for (std::size_t r : idx[i]) out[i].references.push_back(references[r]);
    }
    return out;
}

} // namespace perception
