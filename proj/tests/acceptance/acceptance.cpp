// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "perception/baselines.hpp"
#include "perception/commands.hpp"
#include "perception/perception.hpp"
#include "perception/rng.hpp"
#include "perception/uncertainty.hpp"
#include "support.hpp"

using namespace perception;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kCalibrationLo = 0.40, kCalibrationHi = 0.60;
constexpr double kCalibrationSeconds = 120.0;
constexpr double kMonotoneSeconds = 300.0;
constexpr double kGradTol = 1e-5, kGradStep = 1e-5;
constexpr double kSoftmaxTol = 1e-12;
constexpr double kLossTol = 1e-12;
constexpr double kWeightSumTol = 1e-9, kPermTol = 1e-12;
constexpr double kPearsonTol = 1e-12;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char *f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Corpus synth(Grammar g, std::size_t n, std::uint64_t seed, double level = 0.4) {
    SyntheticSpec s;
    s.grammar = g;
    s.n = n;
    s.seed = seed;
    s.level = level;
    return make_synthetic(s);
}

Outcome calibration() {
    std::string detail;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        const Corpus tr = synth(Grammar::near_grammar, 600, derive_seed(seed, "acc.train"));
        const Corpus dv = synth(Grammar::near_grammar, 100, derive_seed(seed, "acc.dev"));
        const Corpus te = synth(Grammar::near_grammar, 200, derive_seed(seed, "acc.test"));
        const TrainedModel m = train(tr, dv, FeatureConfig{}, Hyperparams{}, seed);
        const double p = evaluate_system(m, te, EvalOptions{}, derive_seed(seed, "score")).p_sys;
        const double secs = seconds_since(t0);
        ok = ok && p >= kCalibrationLo && p <= kCalibrationHi && secs <= kCalibrationSeconds;
        detail += "seed " + std::to_string(seed) + " P_sys " + fmt("%.4f", p) + " (" + fmt("%.1f", secs) + "s) ";
    }
    return {ok, detail};
}

Outcome monotonicity() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    std::vector<double> first_signs;
    bool signs_kept = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        RunConfig c;
        c.seed = seed;
        c.bench.include_fresh = false;
        const BenchReport r = run_bench(c);
        bool strict = true;
        for (std::size_t i = 1; i < r.tiers.size(); ++i) strict = strict && r.tiers[i].p_sys < r.tiers[i - 1].p_sys;
        const auto &rho = r.correlations.front().spearman;
        ok = ok && strict && rho && *rho == -1.0;
        std::vector<double> signs;
        for (const auto &cr : r.correlations) signs.push_back(cr.spearman ? (*cr.spearman > 0) - (*cr.spearman < 0) : 0.0);
        if (first_signs.empty()) first_signs = signs;
        signs_kept = signs_kept && signs == first_signs;
        detail += "seed " + std::to_string(seed) + " [";
        for (const auto &t : r.tiers) detail += fmt("%.4f ", t.p_sys);
        detail.back() = ']';
        detail += " rho " + (rho ? fmt("%.2f", *rho) : std::string("undefined")) + "; ";
    }
    const double secs = seconds_since(t0);
    ok = ok && signs_kept && secs <= kMonotoneSeconds;
    detail += signs_kept ? "all metric correlation signs agree across seeds; " : "correlation signs differ across seeds; ";
    return {ok, detail + fmt("total %.1fs", secs)};
}

double objective(const ModelParams &p, const Eigen::VectorXd &gen, const Eigen::VectorXd &ref, const OutputGrads &w) {
    ForwardTrace t = forward_pair(p, gen, ref, ForwardMode::eval, 0);
    return w.raw_score_gen * t.raw_score_gen + w.raw_score_ref * t.raw_score_ref +
           w.confidence_logit * t.confidence_logit;
}

Outcome gradients() {
    oracle::Pcg g(4);
    double worst = 0.0;
    for (int net = 0; net < 24; ++net) {
        const std::size_t in = 2 * (2 + g.index(6));
        std::vector<std::size_t> hidden{2 + g.index(8)};
        if (net % 2) hidden.push_back(2 + g.index(6));
        ModelParams p = init_model(in, hidden, 0.0, g.next());
        for (auto b : parameter_blocks(p))
            for (double &v : b) v = g.range(-1, 1);
        const auto n = static_cast<Eigen::Index>(in);
        const Eigen::VectorXd a = oracle::random_vector(g, n), b = oracle::random_vector(g, n);
        const OutputGrads w{g.range(-1, 1), g.range(-1, 1), g.range(-1, 1)};
        const Gradients grad = backward(p, forward_pair(p, a, b, ForwardMode::eval, 0), w);
        auto an = parameter_blocks(grad.params);
        auto blocks = parameter_blocks(p);
        for (std::size_t k = 0; k < blocks.size(); ++k)
            for (std::size_t i = 0; i < blocks[k].size(); ++i) {
                const double keep = blocks[k][i];
                blocks[k][i] = keep + kGradStep;
                const double up = objective(p, a, b, w);
                blocks[k][i] = keep - kGradStep;
                const double down = objective(p, a, b, w);
                blocks[k][i] = keep;
                worst = std::max(worst, oracle::rel_err(an[k][i], (up - down) / (2 * kGradStep)));
            }
        for (int member = 0; member < 2; ++member)
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd ap = a, am = a, bp = b, bm = b;
                (member ? bp : ap)[i] += kGradStep;
                (member ? bm : am)[i] -= kGradStep;
                const double fd = (objective(p, ap, bp, w) - objective(p, am, bm, w)) / (2 * kGradStep);
                worst = std::max(worst, oracle::rel_err(member ? grad.input_ref[i] : grad.input_gen[i], fd));
            }
    }
    return {worst < kGradTol, "24 nets, max relative error " + fmt("%.2e", worst)};
}

Outcome softmax_bounds() {
    oracle::Pcg g(5);
    double worst = 0.0;
    bool inside = true;
    for (int i = 0; i < 10000; ++i) {
        const auto s = pair_softmax(g.range(-50, 50), g.range(-50, 50));
        worst = std::max(worst, std::abs(s.p_generated + s.p_reference - 1.0));
        inside = inside && s.p_generated > 0.0 && s.p_generated < 1.0 && s.p_reference > 0.0 && s.p_reference < 1.0;
    }
    return {inside && worst <= kSoftmaxTol,
            "1e4 pairs, max |sum - 1| " + fmt("%.1e", worst) + (inside ? ", all strictly inside" : ", boundary hit")};
}

Outcome loss_identity() {
    Hyperparams h;
    h.epochs = 3;
    const TrainedModel m = train(synth(Grammar::corrupt_grammar, 200, 61), synth(Grammar::corrupt_grammar, 50, 62),
                                 FeatureConfig{}, h, 6);
    double worst = 0.0;
    for (const auto &b : m.log.batches)
        worst = std::max(worst, std::abs(b.loss.total - (b.loss.l_task + h.lambda * b.loss.l_conf + h.beta * b.loss.gp)));
    return {worst <= kLossTol && !m.log.batches.empty(),
            std::to_string(m.log.batches.size()) + " batches, max deviation " + fmt("%.1e", worst)};
}

Outcome penalty_effect() {
    const Corpus tr = synth(Grammar::corrupt_grammar, 300, 71);
    const Corpus dv = synth(Grammar::corrupt_grammar, 50, 72);
    const auto held = featurize_corpus(synth(Grammar::corrupt_grammar, 100, 73), FeatureConfig{});
    Hyperparams with, without;
    with.epochs = without.epochs = 5;
    without.beta = 0.0;
    const double gp10 = mean_gradient_penalty(train(tr, dv, FeatureConfig{}, with, 7).params, held);
    const double gp0 = mean_gradient_penalty(train(tr, dv, FeatureConfig{}, without, 7).params, held);
    return {gp10 < gp0, "held-out mean GP beta=10 " + fmt("%.4g", gp10) + " vs beta=0 " + fmt("%.4g", gp0)};
}

Outcome mc_dropout() {
    const FeatureConfig f;
    const auto pairs = featurize_corpus(synth(Grammar::corrupt_grammar, 40, 81), f);
    const ModelParams off = init_model(f.input_dim(), {128, 64}, 0.0, 8);
    const ModelParams on = init_model(f.input_dim(), {128, 64}, 0.1, 8);
    bool exact_one = true, bounded = true, repeat = true, varied = false;
    double lo = 1.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        exact_one = exact_one && model_confidence(off, pairs[i].gen, pairs[i].ref, 50, i) == 1.0;
        const double m = model_confidence(on, pairs[i].gen, pairs[i].ref, 50, i);
        bounded = bounded && m >= 0.75 && m <= 1.0;
        repeat = repeat && m == model_confidence(on, pairs[i].gen, pairs[i].ref, 50, i);
        varied = varied || m < 1.0;
        lo = std::min(lo, m);
    }
    return {exact_one && bounded && repeat && varied,
            std::string("dropout 0 -> m = 1 ") + (exact_one ? "exactly" : "NOT exactly") + ", dropout 0.1 min m " +
                fmt("%.9f", lo) + (repeat ? ", bit-reproducible" : ", NOT reproducible")};
}

Outcome weights() {
    oracle::Pcg g(9);
    double worst_sum = 0.0, worst_perm = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<PartialRecord> recs(1 + g.index(50));
        for (auto &r : recs) r = {g.unit(), g.unit(), g.range(0.75, 1.0)};
        const auto s = system_score(recs, WeightMode::literal);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(s.weights.begin(), s.weights.end(), 0.0) - 1.0));
        for (std::size_t i = recs.size() - 1; i > 0; --i) std::swap(recs[i], recs[g.index(i + 1)]);
        worst_perm = std::max(worst_perm, std::abs(system_score(recs, WeightMode::literal).p_sys - s.p_sys));
    }
    const std::vector<PartialRecord> fixture{{0.2, 1.0, 1.0}, {0.8, 0.25, 0.75}};
    const double p = system_score(fixture, WeightMode::literal).p_sys;
    return {worst_sum <= kWeightSumTol && worst_perm <= kPermTol && p == 0.6,
            "max |sum w - 1| " + fmt("%.1e", worst_sum) + ", max permutation shift " + fmt("%.1e", worst_perm) +
                ", fixture P_sys " + fmt("%.17g", p)};
}

Outcome data_uncertainty() {
    std::string detail;
    bool ok = true;
    auto mixed = [](std::uint64_t seed, std::size_t n) {
        Corpus amb = synth(Grammar::ref_grammar, n / 2, derive_seed(seed, "amb"));
        Corpus easy = synth(Grammar::corrupt_grammar, n / 2, derive_seed(seed, "easy"), 0.8);
        Corpus out;
        for (auto &s : amb.samples) out.samples.push_back({"a" + s.id, s.context, s.reference, s.generation});
        for (auto &s : easy.samples) out.samples.push_back({"e" + s.id, s.context, s.reference, s.generation});
        return out;
    };
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const TrainedModel m =
            train(mixed(derive_seed(seed, "train"), 600), mixed(derive_seed(seed, "dev"), 100), FeatureConfig{}, Hyperparams{}, seed);
        const Corpus te = mixed(derive_seed(seed, "test"), 200);
        const auto pairs = featurize_corpus(te, m.features);
        double c_amb = 0.0, c_easy = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double c = sigmoid(forward_pair(m.params, pairs[i].gen, pairs[i].ref, ForwardMode::eval, 0).confidence_logit);
            (i < pairs.size() / 2 ? c_amb : c_easy) += c / static_cast<double>(pairs.size() / 2);
        }
        ok = ok && c_easy > c_amb;
        detail += "seed " + std::to_string(seed) + " c easy " + fmt("%.4f", c_easy) + " vs ambiguous " + fmt("%.4f", c_amb) + "; ";
    }
    return {ok, detail};
}

Outcome baselines() {
    const std::vector<std::string> cat{"the cat"};
    const double b1 = bleu("the the the the", cat, {1, BleuSmoothing::none, false});
    const std::vector<std::string> refs{"the old farmer sold a red kite"};
    bool identical = true;
    for (std::size_t n = 1; n <= 4; ++n) identical = identical && bleu(refs[0], refs, {n, BleuSmoothing::none, false}) == 1.0;

    // Hand count: each candidate token credited at most as often as it occurs in the reference.
    std::map<std::string, int> in_ref;
    for (const char *t : {"the", "cat"}) ++in_ref[t];
    std::map<std::string, int> in_cand;
    for (int i = 0; i < 4; ++i) ++in_cand["the"];
    int clipped = 0;
    for (const auto &[tok, k] : in_cand) clipped += std::min(k, in_ref[tok]);
    const oracle::Big want = oracle::Big(clipped) / oracle::Big(4); // c = 4 > r = 2, no brevity penalty
    oracle::Pcg g(11);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(2 + g.index(40)), up(x.size()), down(x.size()), noisy(x.size());
        const double a = g.range(0.1, 10), c = g.range(-5, 5);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = g.range(-100, 100);
            up[i] = a * x[i] + c;
            down[i] = -a * x[i] + c;
            noisy[i] = x[i] + g.range(-50, 50);
        }
        worst = std::max({worst, std::abs(pearson(x, up) - 1.0), std::abs(pearson(x, down) + 1.0),
                          std::abs(pearson(x, noisy) - oracle::big_pearson(x, noisy).convert_to<double>())});
    }
    const bool ok = b1 == want.convert_to<double>() && identical && worst <= kPearsonTol;
    // 2/4 would credit "the" twice, but the reference holds it once.
    return {ok, "BLEU-1 fixture " + fmt("%.17g", b1) + " vs hand count " + fmt("%.17g", want.convert_to<double>()) + (identical ? ", identical -> 1.0" : ", identical != 1.0") +
                    ", pearson max deviation " + fmt("%.1e", worst)};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome reproducibility() {
    const auto dir = oracle::scratch_dir("acceptance-repro");
    RunConfig c;
    c.out = (dir / "run").string();
    c.seed = 12;
    c.hyper.epochs = 3;
    c.synth.n = 200;
    std::ostringstream sink;
    cmd_synth(c, dir / "data.jsonl", sink);
    c.data.train = (dir / "data.jsonl").string();
    const char *files[] = {"checkpoint.json", "training_log.json", "heldout_test.jsonl", "report.json", "scores.csv"};
    std::vector<std::string> first, second;
    for (auto *into : {&first, &second}) {
        cmd_train(c, sink);
        cmd_score(c, dir / "run" / "checkpoint.json", dir / "run" / "heldout_test.jsonl", sink);
        for (const char *f : files) into->push_back(slurp(dir / "run" / f));
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < first.size(); ++i) same += first[i] == second[i] && !first[i].empty();
    return {same == first.size(), std::to_string(same) + "/" + std::to_string(first.size()) + " artifacts byte-identical"};
}

} // namespace

int main() {
    std::printf("criterion 1 NOT REPRODUCIBLE: human-judgment correlations need human ratings and pretrained models\n");
    const std::pair<int, std::function<Outcome()>> criteria[] = {
        {2, calibration},  {3, monotonicity},   {4, gradients},        {5, softmax_bounds},
        {6, loss_identity}, {7, penalty_effect}, {8, mc_dropout},      {9, weights},
        {10, data_uncertainty}, {11, baselines}, {12, reproducibility},
    };
    int failed = 0;
    for (const auto &[id, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = run();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of 11 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
