// perception: train, score and benchmark the hashed-feature critic.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perception/commands.hpp"
#include "perception/config.hpp"
#include "perception/error.hpp"

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed;
    std::string out;
};

void add_common(CLI::App *cmd, Common &c) {
    cmd->add_option("--config", c.config_path, "TOML config file");
    cmd->add_option("--seed", c.seed, "master seed (overrides config)");
    cmd->add_option("--out", c.out, "output directory (overrides config)");
    cmd->add_option("--set", c.overrides, "override one key, e.g. --set train.epochs=3")->take_all();
}

perception::RunConfig resolve(const Common &c) {
    perception::RunConfig config;
    if (!c.config_path.empty()) perception::apply_config_file(config, c.config_path);
    for (const auto &kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw perception::ValidationError("--set expects key=value, got '" + kv + "'");
        perception::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!c.seed.empty()) perception::apply_setting(config, "seed", c.seed);
    if (!c.out.empty()) perception::apply_setting(config, "out", c.out);
    perception::validate(config);
    return config;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Perception Score: a learned, uncertainty-weighted metric for generated text"};
    app.require_subcommand(1);

    Common common;
    std::string checkpoint, test, input, output;

    auto *train = app.add_subcommand("train", "train a critic; writes checkpoint.json and training_log.json");
    add_common(train, common);

    auto *score = app.add_subcommand("score", "score a test corpus; writes report.json and scores.csv");
    add_common(score, common);
    score->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    score->add_option("--test", test, "test corpus (defaults to data.test)");

    auto *bench = app.add_subcommand("bench", "graded-corruption benchmark against BLEU-1..4");
    add_common(bench, common);

    auto *synth = app.add_subcommand("synth", "write a synthetic corpus");
    add_common(synth, common);
    synth->add_option("--output", output, "output JSONL (defaults to <out>/synthetic.jsonl)");

    auto *perturb = app.add_subcommand("perturb", "perturb the generations of a corpus");
    add_common(perturb, common);
    perturb->add_option("--input", input, "input JSONL")->required();
    perturb->add_option("--output", output, "output JSONL (defaults to <out>/perturbed.jsonl)");

    auto *keys = app.add_subcommand("config", "print the effective config as TOML");
    add_common(keys, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const perception::RunConfig config = resolve(common);
        if (train->parsed()) perception::cmd_train(config, std::cout);
        else if (score->parsed()) perception::cmd_score(config, checkpoint, test, std::cout);
        else if (bench->parsed()) perception::cmd_bench(config, std::cout);
        else if (synth->parsed()) perception::cmd_synth(config, output, std::cout);
        else if (perturb->parsed()) perception::cmd_perturb(config, input, output, std::cout);
        else if (keys->parsed()) std::cout << perception::to_toml(config);
    } catch (const perception::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return perception::exit_code(e);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
