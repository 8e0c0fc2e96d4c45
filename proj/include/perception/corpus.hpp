#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace perception {

/// One evaluation record: a context, the gold reference and the system
/// generation produced for that context.
struct Sample {
    std::string id;
    std::string context;
    std::string reference;
    std::string generation;

    bool operator==(const Sample &) const = default;
};

enum class CorpusKind { conditional, unconditional };

struct Corpus {
    std::vector<Sample> samples;
    CorpusKind kind = CorpusKind::conditional;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    bool operator==(const Corpus &) const = default;
};

std::string_view to_string(CorpusKind kind);
CorpusKind parse_corpus_kind(std::string_view name);

/// Checks the Sample and Corpus invariants: trimmed reference/generation
/// non-empty, ids unique, unconditional corpora carry no context.
void validate(const Corpus &corpus);

/// Reads UTF-8 JSON Lines with keys id, context, reference, generation.
/// Blank lines are skipped; line numbers in errors are 1-based.
Corpus load_jsonl(const std::filesystem::path &path, CorpusKind kind);
Corpus parse_jsonl(std::istream &in, CorpusKind kind, const std::string &source = "<stream>");

/// One object per line, keys in the order id, context, reference, generation.
void write_jsonl(std::ostream &out, const Corpus &corpus);
void save_jsonl(const std::filesystem::path &path, const Corpus &corpus);
std::string to_jsonl(const Corpus &corpus);

struct CorpusSplit {
    Corpus train;
    Corpus dev;
    Corpus test;
};

/// Seeded permutation followed by floor-rounded train/dev sizes; the
/// remainder goes to test.
CorpusSplit split(const Corpus &corpus, double train_frac, double dev_frac, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Perturbations

enum class PerturbationKind { word_drop, word_shuffle, word_substitute, truncate };

std::string_view to_string(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(std::string_view name);

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::word_substitute;
    double level = 0.0;
    std::uint64_t seed = 0;
};

std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string> &tokens);

/// Applies a graded corruption to whitespace tokens. Level 0 returns the
/// input byte for byte; otherwise the result is the surviving tokens joined
/// by single spaces and always holds at least one token.
///
/// Draw protocol, with rng = Rng(spec.seed) and n the token count:
///  - word_drop: for each token in order, drop it when rng.uniform() < level;
///    if nothing survives, the first token is kept.
///  - word_shuffle: ceil(level*n) times, i = rng.below(n-1), swap tokens i, i+1.
///  - word_substitute: ceil(level*n) steps of a partial Fisher-Yates over
///    positions; step s picks j = s + rng.below(n-s), swaps the position
///    order, then replaces the token with vocabulary()[v'] where
///    v = rng.below(V-1) and v' skips the current token's vocabulary index.
///  - truncate: keep the first max(1, ceil((1-level)*n)) tokens.
std::string perturb(std::string_view text, const PerturbationSpec &spec);

/// Perturbs the generation column; sample i uses seed
/// derive_seed(spec.seed, "perturb", i).
Corpus perturb_generations(const Corpus &corpus, const PerturbationSpec &spec);

// ---------------------------------------------------------------------------
// Synthetic corpora

enum class Grammar { ref_grammar, near_grammar, corrupt_grammar };

std::string_view to_string(Grammar grammar);
Grammar parse_grammar(std::string_view name);

struct SyntheticSpec {
    Grammar grammar = Grammar::ref_grammar;
    std::size_t n = 100;
    std::uint64_t seed = 0;
    CorpusKind kind = CorpusKind::conditional;
    // Used by corrupt_grammar only.
    PerturbationKind corruption = PerturbationKind::word_substitute;
    double level = 0.4;
};

/// Sentences follow subject-verb-object-modifier with 20 terminals per slot
/// (10 tokens each). References are identical across grammars for a given
/// seed:
///  - ref_grammar: generation is the reference itself.
///  - near_grammar: generation is an independent draw sharing the context's
///    subject, so it is distributed exactly like the reference.
///  - corrupt_grammar: generation is the reference perturbed at `level`.
/// Conditional contexts introduce the subject; unconditional contexts are empty.
Corpus make_synthetic(const SyntheticSpec &spec);

/// Sorted distinct tokens over every grammar terminal and context template.
const std::vector<std::string> &vocabulary();

struct GrammarSlots {
    std::vector<std::string> subjects;
    std::vector<std::string> verbs;
    std::vector<std::string> objects;
    std::vector<std::string> modifiers;
    std::string context_prefix;
};
const GrammarSlots &grammar_slots();

// ---------------------------------------------------------------------------

struct UnconditionalPairing {
    std::string generation;
    std::vector<std::string> references;
};

/// Pairs every generation with k distinct references. Generation i draws a
/// partial Fisher-Yates over reference indices with
/// Rng(derive_seed(seed, "pair", i)).
std::vector<UnconditionalPairing> pair_unconditional(const std::vector<std::string> &generations,
                                                     const std::vector<std::string> &references,
                                                     std::size_t k, std::uint64_t seed);

/// Index-level variant: result[i] lists the reference indices used for generation i.
std::vector<std::vector<std::size_t>> pair_indices(std::size_t generations, std::size_t references,
                                                   std::size_t k, std::uint64_t seed);

} // namespace perception
