#include <doctest.h>

#include <fstream>
#include <sstream>

#include "perception/checkpoint.hpp"
#include "perception/commands.hpp"
#include "perception/error.hpp"
#include "support.hpp"

using namespace perception;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig tiny(const fs::path &out) {
    RunConfig c;
    c.out = out.string();
    c.features.dim_per_segment = 64;
    c.hyper.hidden_dims = {8};
    c.hyper.epochs = 2;
    c.hyper.mc_passes = 4;
    c.synth.n = 40;
    return c;
}

} // namespace

TEST_CASE("synth, train and score write reproducible artifacts") {
    const auto dir = oracle::scratch_dir("commands");
    std::ostringstream sink;
    RunConfig c = tiny(dir / "run");
    cmd_synth(c, dir / "data.jsonl", sink);
    c.data.train = (dir / "data.jsonl").string();

    cmd_train(c, sink);
    const std::string ckpt = slurp(dir / "run" / "checkpoint.json");
    const std::string log = slurp(dir / "run" / "training_log.json");
    CHECK(fs::exists(dir / "run" / "heldout_test.jsonl"));
    cmd_train(c, sink);
    CHECK(slurp(dir / "run" / "checkpoint.json") == ckpt);
    CHECK(slurp(dir / "run" / "training_log.json") == log);

    const fs::path test = dir / "run" / "heldout_test.jsonl";
    std::ostringstream first, second;
    cmd_score(c, dir / "run" / "checkpoint.json", test, first);
    const std::string report = slurp(dir / "run" / "report.json");
    const std::string csv = slurp(dir / "run" / "scores.csv");
    cmd_score(c, dir / "run" / "checkpoint.json", test, second);
    CHECK(first.str() == second.str());
    CHECK(slurp(dir / "run" / "report.json") == report);
    CHECK(slurp(dir / "run" / "scores.csv") == csv);
    CHECK(report.find("\"train.epochs\"") != std::string::npos);

    SUBCASE("a single sample reports its own p_generated") {
        Corpus held = load_jsonl(test, CorpusKind::conditional);
        Corpus one;
        one.samples = {held.samples.front()};
        save_jsonl(dir / "one.jsonl", one);
        std::ostringstream o;
        SystemReport r = cmd_score(c, dir / "run" / "checkpoint.json", dir / "one.jsonl", o);
        const std::string row = slurp(dir / "run" / "scores.csv");
        CHECK(row.find(format_double(r.p_sys)) != std::string::npos);
        CHECK(r.p_sys == r.records[0].p_generated);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f\n", r.p_sys);
        CHECK(o.str() == buf);
    }
    SUBCASE("a different feature layout is refused") {
        RunConfig other = c;
        other.features.hash_seed = 1;
        CHECK_THROWS_AS(cmd_score(other, dir / "run" / "checkpoint.json", test, sink), CompatibilityError);
    }
    SUBCASE("missing inputs name the path") {
        try {
            cmd_score(c, dir / "nope.json", test, sink);
            FAIL("expected an input error");
        } catch (const InputError &e) {
            CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
        }
        RunConfig bad = c;
        bad.data.train = (dir / "absent.jsonl").string();
        CHECK_THROWS_AS(cmd_train(bad, sink), InputError);
    }
}

TEST_CASE("train with zero epochs keeps the initialization") {
    const auto dir = oracle::scratch_dir("epochs0");
    std::ostringstream sink;
    RunConfig c = tiny(dir / "run");
    c.hyper.epochs = 0;
    cmd_synth(c, dir / "d.jsonl", sink);
    c.data.train = (dir / "d.jsonl").string();
    std::ostringstream o;
    TrainedModel m = cmd_train(c, o);
    TrainedModel back = load_checkpoint(dir / "run" / "checkpoint.json");
    CHECK(back.params.trunk[0].weight == init_model(c.features.input_dim(), {8}, c.hyper.dropout_rate, c.seed).trunk[0].weight);
    CHECK(m.log.best_epoch == 0);
    CHECK(o.str().rfind("best_epoch 0", 0) == 0);
}

TEST_CASE("synth and perturb") {
    const auto dir = oracle::scratch_dir("synth");
    std::ostringstream sink;
    RunConfig c = tiny(dir / "run");
    c.synth.n = 0;
    CHECK_THROWS_AS(cmd_synth(c, dir / "empty.jsonl", sink), ValidationError);
    CHECK_FALSE(fs::exists(dir / "empty.jsonl"));

    c.synth.n = 25;
    Corpus made = cmd_synth(c, dir / "s.jsonl", sink);
    CHECK(load_jsonl(dir / "s.jsonl", CorpusKind::conditional) == made);
    cmd_synth(c, {}, sink);
    CHECK(slurp(dir / "run" / "synthetic.jsonl") == slurp(dir / "s.jsonl"));

    c.perturb.level = 0.0;
    cmd_perturb(c, dir / "s.jsonl", dir / "p0.jsonl", sink);
    CHECK(slurp(dir / "p0.jsonl") == slurp(dir / "s.jsonl"));
    c.perturb.level = 0.5;
    Corpus p = cmd_perturb(c, dir / "s.jsonl", dir / "p5.jsonl", sink);
    CHECK(p.size() == made.size());
    CHECK(slurp(dir / "p5.jsonl") != slurp(dir / "s.jsonl"));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.samples[i].reference == made.samples[i].reference);
    CHECK_THROWS_AS(cmd_perturb(c, dir / "missing.jsonl", dir / "x.jsonl", sink), InputError);
}

TEST_CASE("bench with two tiers is flagged degenerate") {
    RunConfig c = tiny(oracle::scratch_dir("bench"));
    c.bench.n_train = 30;
    c.bench.n_dev = 10;
    c.bench.n_test = 10;
    c.bench.levels = {0.0, 0.4};
    c.bench.include_fresh = false;
    std::ostringstream o;
    BenchReport r = cmd_bench(c, o);
    CHECK(r.tiers.size() == 2);
    CHECK(r.correlations.size() == 5);
    for (const auto &cr : r.correlations) CHECK(cr.degenerate);
    CHECK(o.str().find("[degenerate]") != std::string::npos);
    CHECK(fs::exists(fs::path(c.out) / "bench.json"));

    c.bench.levels = {0.0, 0.2, 0.4};
    c.bench.include_fresh = true;
    BenchReport full = run_bench(c);
    CHECK(full.tiers.size() == 4);
    CHECK(full.tiers.back().name == "fresh");
    CHECK(full.tiers[1].name == "corrupt@0.2");
    // level 0 leaves generations equal to references
    CHECK(full.tiers[0].bleu[3] == 1.0);
    CHECK(std::abs(full.tiers[0].p_sys - 0.5) < 1e-12);
    CHECK_FALSE(full.correlations[1].degenerate);
    CHECK(*full.correlations[1].spearman == -1.0);
}
