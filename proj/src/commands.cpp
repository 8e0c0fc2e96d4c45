#include "perception/commands.hpp"

#include <cstdio>
#include <ostream>

#include "perception/baselines.hpp"
#include "perception/checkpoint.hpp"
#include "perception/error.hpp"
#include "perception/rng.hpp"

namespace perception {

namespace {

std::filesystem::path prepare_out(const RunConfig &config) {
    std::filesystem::path dir(config.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::filesystem::path output_file(const RunConfig &config, const std::filesystem::path &explicit_path,
                                  const char *default_name) {
    if (explicit_path.empty()) return prepare_out(config) / default_name;
    std::error_code ec;
    if (explicit_path.has_parent_path()) std::filesystem::create_directories(explicit_path.parent_path(), ec);
    if (ec) throw InputError("cannot create directory for '" + explicit_path.string() + "': " + ec.message());
    return explicit_path;
}

Corpus load_required(const std::string &path, CorpusKind kind, const char *what) {
    if (path.empty()) throw InputError(std::string(what) + " corpus path is not set");
    if (!std::filesystem::exists(path)) throw InputError(std::string(what) + " file '" + path + "' does not exist");
    return load_jsonl(path, kind);
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string six_places(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

TrainedModel cmd_train(const RunConfig &config, std::ostream &out) {
    validate(config);
    Corpus train_set = load_required(config.data.train, config.data.kind, "train");
    const auto dir = prepare_out(config);

    Corpus dev_set;
    if (!config.data.dev.empty()) {
        dev_set = load_required(config.data.dev, config.data.kind, "dev");
    } else {
        CorpusSplit parts = split(train_set, config.data.train_frac, config.data.dev_frac, config.seed);
        train_set = std::move(parts.train);
        dev_set = std::move(parts.dev);
        save_jsonl(dir / "heldout_test.jsonl", parts.test);
    }

    TrainedModel model = train(train_set, dev_set, config.features, config.hyper, config.seed);
    const auto echo = to_json(config);
    save_checkpoint(dir / "checkpoint.json", model, echo);
    write_text(dir / "training_log.json", training_log_json(model, echo).dump(2) + "\n");

    double dev_p = 0.0;
    for (const auto &e : model.log.epochs)
        if (e.epoch == model.log.best_epoch) dev_p = e.dev_mean_p_reference;
    out << "best_epoch " << model.log.best_epoch << " dev_mean_p_reference " << six_places(dev_p) << "\n";
    return model;
}

SystemReport cmd_score(const RunConfig &config, const std::filesystem::path &checkpoint,
                       const std::filesystem::path &test_path, std::ostream &out) {
    validate(config);
    if (!std::filesystem::exists(checkpoint))
        throw InputError("checkpoint file '" + checkpoint.string() + "' does not exist");
    TrainedModel model = load_checkpoint(checkpoint, config.features);
    const std::string test = test_path.empty() ? config.data.test : test_path.string();
    Corpus test_set = load_required(test, config.data.kind, "test");
    const auto dir = prepare_out(config);

    SystemReport report = evaluate_system(model, test_set, config.eval_options(), derive_seed(config.seed, "score"));
    const auto echo = to_json(config);
    write_text(dir / "report.json", system_report_json(report, echo).dump(2) + "\n");
    write_text(dir / "scores.csv", scores_csv(report));
    out << six_places(report.p_sys) << "\n";
    return report;
}

BenchReport run_bench(const RunConfig &config) {
    validate(config);
    const BenchConfig &b = config.bench;
    if (b.levels.empty()) throw ValidationError("bench.levels must not be empty");

    SyntheticSpec spec;
    spec.grammar = Grammar::corrupt_grammar;
    spec.kind = CorpusKind::conditional;
    spec.corruption = b.corruption;
    spec.level = b.train_level;

    spec.n = b.n_train;
    spec.seed = derive_seed(config.seed, "bench.train");
    const Corpus train_set = make_synthetic(spec);
    spec.n = b.n_dev;
    spec.seed = derive_seed(config.seed, "bench.dev");
    const Corpus dev_set = make_synthetic(spec);

    const TrainedModel model = train(train_set, dev_set, config.features, config.hyper, config.seed);

    BenchReport report;
    report.seed = config.seed;
    report.best_epoch = model.log.best_epoch;
    for (const auto &e : model.log.epochs)
        if (e.epoch == model.log.best_epoch) report.dev_mean_p_reference = e.dev_mean_p_reference;

    const EvalOptions eval = config.eval_options();
    const std::uint64_t score_seed = derive_seed(config.seed, "bench.score");
    auto score_tier = [&](const Corpus &tier, std::string name, std::optional<double> level) {
        TierResult t;
        t.name = std::move(name);
        t.level = level;
        t.p_sys = evaluate_system(model, tier, eval, score_seed).p_sys;
        for (std::size_t n = 1; n <= 4; ++n) {
            BleuConfig bc{n, BleuSmoothing::add_one, false};
            double acc = 0.0;
            for (const Sample &s : tier.samples) {
                const std::string refs[] = {s.reference};
                acc += bleu(s.generation, refs, bc);
            }
            t.bleu.push_back(acc / static_cast<double>(tier.size()));
        }
        report.tiers.push_back(std::move(t));
    };

    spec.n = b.n_test;
    spec.seed = derive_seed(config.seed, "bench.test");
    for (double level : b.levels) {
        spec.level = level;
        score_tier(make_synthetic(spec), "corrupt@" + short_number(level), level);
    }
    if (b.include_fresh) {
        SyntheticSpec fresh = spec;
        fresh.grammar = Grammar::near_grammar;
        score_tier(make_synthetic(fresh), "fresh", std::nullopt);
    }

    const bool few = b.levels.size() < 3;
    const auto graded = b.levels.size();
    auto correlate = [&](const std::string &metric, auto value_of) {
        CorrelationResult c;
        c.metric = metric;
        std::vector<double> scores;
        for (std::size_t i = 0; i < graded; ++i) scores.push_back(value_of(report.tiers[i]));
        try {
            c.spearman = spearman(b.levels, scores);
        } catch (const Error &) {
            c.spearman.reset();
        }
        c.degenerate = few || !c.spearman.has_value();
        report.correlations.push_back(c);
    };
    if (graded >= 2) {
        correlate("perception_score", [](const TierResult &t) { return t.p_sys; });
        for (std::size_t n = 0; n < 4; ++n)
            correlate("bleu_" + std::to_string(n + 1), [n](const TierResult &t) { return t.bleu[n]; });
    } else {
        for (const char *metric : {"perception_score", "bleu_1", "bleu_2", "bleu_3", "bleu_4"})
            report.correlations.push_back({metric, std::nullopt, true});
    }
    return report;
}

BenchReport cmd_bench(const RunConfig &config, std::ostream &out) {
    BenchReport report = run_bench(config);
    const auto dir = prepare_out(config);
    write_text(dir / "bench.json", bench_json(report, to_json(config)).dump(2) + "\n");
    write_text(dir / "bench.csv", bench_csv(report));
    for (const auto &t : report.tiers)
        out << t.name << " perception_score " << six_places(t.p_sys) << " bleu_4 " << six_places(t.bleu[3]) << "\n";
    for (const auto &c : report.correlations)
        out << "spearman(" << c.metric << ", level) " << (c.spearman ? six_places(*c.spearman) : std::string("undefined"))
            << (c.degenerate ? " [degenerate]" : "") << "\n";
    return report;
}

Corpus cmd_synth(const RunConfig &config, const std::filesystem::path &output, std::ostream &out) {
    validate(config);
    SyntheticSpec spec;
    spec.grammar = config.synth.grammar;
    spec.kind = config.synth.kind;
    spec.n = config.synth.n;
    spec.seed = config.seed;
    spec.corruption = config.synth.corruption;
    spec.level = config.synth.level;
    Corpus corpus = make_synthetic(spec);
    const auto path = output_file(config, output, "synthetic.jsonl");
    save_jsonl(path, corpus);
    out << "wrote " << corpus.size() << " samples to " << path.string() << "\n";
    return corpus;
}

Corpus cmd_perturb(const RunConfig &config, const std::filesystem::path &input, const std::filesystem::path &output,
                   std::ostream &out) {
    validate(config);
    Corpus corpus = load_required(input.string(), config.data.kind, "input");
    Corpus perturbed = perturb_generations(corpus, {config.perturb.kind, config.perturb.level, config.seed});
    const auto path = output_file(config, output, "perturbed.jsonl");
    save_jsonl(path, perturbed);
    out << "wrote " << perturbed.size() << " samples to " << path.string() << "\n";
    return perturbed;
}

} // namespace perception
