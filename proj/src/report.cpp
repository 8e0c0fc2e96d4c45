#include "perception/report.hpp"

#include <cstdio>
#include <fstream>

#include "perception/error.hpp"

namespace perception {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

nlohmann::ordered_json loss_json(const LossBreakdown &loss) {
    nlohmann::ordered_json j;
    j["l_task"] = loss.l_task;
    j["l_conf"] = loss.l_conf;
    j["gp"] = loss.gp;
    j["total"] = loss.total;
    return j;
}

nlohmann::ordered_json training_log_json(const TrainedModel &model, const nlohmann::ordered_json &config_echo) {
    nlohmann::ordered_json j;
    j["kind"] = "training_log";
    j["seed"] = model.seed;
    j["lambda"] = model.hyper.lambda;
    j["beta"] = model.hyper.beta;
    j["best_epoch"] = model.log.best_epoch;
    nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
    for (const auto &e : model.log.epochs) {
        nlohmann::ordered_json ej;
        ej["epoch"] = e.epoch;
        ej["mean_loss"] = loss_json(e.mean_loss);
        ej["dev_mean_log_p_reference"] = e.dev_mean_log_p_reference;
        ej["dev_mean_p_reference"] = e.dev_mean_p_reference;
        epochs.push_back(std::move(ej));
    }
    j["epochs"] = std::move(epochs);
    nlohmann::ordered_json batches = nlohmann::ordered_json::array();
    for (const auto &b : model.log.batches) {
        nlohmann::ordered_json bj;
        bj["epoch"] = b.epoch;
        bj["batch"] = b.batch;
        bj["size"] = b.size;
        bj["loss"] = loss_json(b.loss);
        bj["mean_c"] = b.mean_c;
        batches.push_back(std::move(bj));
    }
    j["batches"] = std::move(batches);
    j["config"] = config_echo;
    return j;
}

nlohmann::ordered_json system_report_json(const SystemReport &report, const nlohmann::ordered_json &config_echo) {
    nlohmann::ordered_json j;
    j["kind"] = "system_report";
    j["p_sys"] = report.p_sys;
    j["weight_mode"] = std::string(to_string(report.weight_mode));
    j["mc_passes"] = report.mc_passes;
    j["references_per_generation"] = report.references_per_generation;
    j["seed"] = report.seed;
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto &r : report.records) {
        nlohmann::ordered_json rj;
        rj["id"] = r.sample_id;
        rj["p_generated"] = r.p_generated;
        rj["p_reference"] = r.p_reference;
        rj["c"] = r.c;
        rj["m"] = r.m;
        rj["w"] = r.w;
        records.push_back(std::move(rj));
    }
    j["records"] = std::move(records);
    j["config"] = config_echo;
    return j;
}

namespace {

std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace

std::string scores_csv(const SystemReport &report) {
    std::string out = "id,p_generated,p_reference,c,m,w\n";
    for (const auto &r : report.records) {
        out += csv_field(r.sample_id);
        for (double v : {r.p_generated, r.p_reference, r.c, r.m, r.w}) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

nlohmann::ordered_json bench_json(const BenchReport &report, const nlohmann::ordered_json &config_echo) {
    nlohmann::ordered_json j;
    j["kind"] = "bench_report";
    j["seed"] = report.seed;
    j["best_epoch"] = report.best_epoch;
    j["dev_mean_p_reference"] = report.dev_mean_p_reference;
    nlohmann::ordered_json tiers = nlohmann::ordered_json::array();
    for (const auto &t : report.tiers) {
        nlohmann::ordered_json tj;
        tj["name"] = t.name;
        tj["level"] = t.level ? nlohmann::ordered_json(*t.level) : nlohmann::ordered_json(nullptr);
        tj["perception_score"] = t.p_sys;
        for (std::size_t n = 0; n < t.bleu.size(); ++n) tj["bleu_" + std::to_string(n + 1)] = t.bleu[n];
        tiers.push_back(std::move(tj));
    }
    j["tiers"] = std::move(tiers);
    nlohmann::ordered_json corr = nlohmann::ordered_json::array();
    for (const auto &c : report.correlations) {
        nlohmann::ordered_json cj;
        cj["metric"] = c.metric;
        cj["spearman_vs_level"] = c.spearman ? nlohmann::ordered_json(*c.spearman) : nlohmann::ordered_json(nullptr);
        cj["degenerate"] = c.degenerate;
        corr.push_back(std::move(cj));
    }
    j["correlations"] = std::move(corr);
    j["config"] = config_echo;
    return j;
}

std::string bench_csv(const BenchReport &report) {
    std::string out = "tier,level,perception_score,bleu_1,bleu_2,bleu_3,bleu_4\n";
    for (const auto &t : report.tiers) {
        out += csv_field(t.name) + "," + (t.level ? format_double(*t.level) : std::string()) + "," + format_double(t.p_sys);
        for (double b : t.bleu) out += "," + format_double(b);
        out += '\n';
    }
    return out;
}

} // namespace perception
