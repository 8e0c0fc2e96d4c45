#include "perception/perception.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "perception/error.hpp"
#include "perception/rng.hpp"

namespace perception {

PairScores pair_softmax(double raw_gen, double raw_ref) {
    if (!std::isfinite(raw_gen) || !std::isfinite(raw_ref)) throw NumericError("pair_softmax: non-finite raw score");
    // Subtracting the larger score leaves exp(-|gap|) for the smaller side.
    const double gap = raw_gen - raw_ref;
    double smaller = 1.0 / (1.0 + std::exp(std::abs(gap)));
    smaller = std::max(smaller, DBL_MIN);
    const double larger = std::min(1.0 - smaller, std::nextafter(1.0, 0.0));
    return gap >= 0.0 ? PairScores{larger, smaller} : PairScores{smaller, larger};
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double adjusted_probability(double p_reference, double c) {
    if (!(p_reference >= 0.0 && p_reference <= 1.0)) throw ValidationError("p_reference must lie in [0, 1]");
    if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("data confidence c must lie in [0, 1]");
    c = std::clamp(c, kConfidenceFloor, 1.0);
    return c * p_reference + (1.0 - c);
}

namespace {

double mean_neg_log(std::span<const double> values, const char *what) {
    if (values.empty()) throw ValidationError(std::string(what) + ": empty batch");
    double acc = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v <= 0.0) throw NumericError(std::string(what) + ": entry is not positive");
        if (v > 1.0) throw ValidationError(std::string(what) + ": entry exceeds 1");
        acc -= std::log(v);
    }
    return acc / static_cast<double>(values.size());
}

} // namespace

double loss_task(std::span<const double> p_prime) { return mean_neg_log(p_prime, "loss_task"); }

double loss_confidence(std::span<const double> c) { return mean_neg_log(c, "loss_confidence"); }

LossBreakdown combine_losses(double l_task, double l_conf, double gp, double lambda, double beta) {
    return {l_task, l_conf, gp, l_task + lambda * l_conf + beta * gp};
}

std::string_view to_string(GpMode mode) { return mode == GpMode::pairs ? "pairs" : "interpolated"; }

GpMode parse_gp_mode(std::string_view name) {
    if (name == "pairs") return GpMode::pairs;
    if (name == "interpolated") return GpMode::interpolated;
    throw ValidationError("unknown gp_mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

namespace {

constexpr OutputGrads kCriticUpstream{-1.0, 1.0, 0.0};

Eigen::VectorXd stack(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
}

} // namespace

double critic_difference(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                         const Eigen::Ref<const Eigen::VectorXd> &ref) {
    ForwardTrace t = forward_pair(params, gen, ref, ForwardMode::eval, 0);
    return t.raw_score_ref - t.raw_score_gen;
}

Eigen::VectorXd critic_input_gradient(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                                      const Eigen::Ref<const Eigen::VectorXd> &ref) {
    ForwardTrace t = forward_pair(params, gen, ref, ForwardMode::eval, 0);
    Gradients g = backward(params, t, kCriticUpstream, false);
    return stack(g.input_gen, g.input_ref);
}

namespace {

// Adds weight * d(value)/d(theta) into `into` when it is non-null.
GradientPenalty penalty_impl(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                             const Eigen::Ref<const Eigen::VectorXd> &ref, ModelParams *into, double weight) {
    ForwardTrace t = forward_pair(params, gen, ref, ForwardMode::eval, 0);
    Gradients g = backward(params, t, kCriticUpstream, false);
    const double norm = std::sqrt(g.input_gen.squaredNorm() + g.input_ref.squaredNorm());
    if (!std::isfinite(norm)) throw NumericError("gradient penalty: non-finite critic gradient");

    GradientPenalty out;
    out.grad_norm = norm;
    out.value = (norm - 1.0) * (norm - 1.0);
    if (!into || norm == 0.0) return out;

    const double h = kGpDifferenceStep;
    const Eigen::VectorXd du_gen = (h / norm) * g.input_gen;
    const Eigen::VectorXd du_ref = (h / norm) * g.input_ref;
    // d value / d theta = 2 (||g|| - 1) * d||g||/d theta
    const double scale = weight * 2.0 * (norm - 1.0) / (2.0 * h);
    ForwardTrace tp = forward_pair(params, gen + du_gen, ref + du_ref, ForwardMode::eval, 0);
    backward_into(params, tp, kCriticUpstream, *into, scale);
    ForwardTrace tm = forward_pair(params, gen - du_gen, ref - du_ref, ForwardMode::eval, 0);
    backward_into(params, tm, kCriticUpstream, *into, -scale);
    return out;
}

} // namespace

GradientPenalty gradient_penalty(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                                 const Eigen::Ref<const Eigen::VectorXd> &ref, bool want_param_grads) {
    if (!want_param_grads) return penalty_impl(params, gen, ref, nullptr, 1.0);
    ModelParams grads = zeros_like(params);
    GradientPenalty out = penalty_impl(params, gen, ref, &grads, 1.0);
    out.param_grads = std::move(grads);
    return out;
}

// ---------------------------------------------------------------------------

void validate(const Hyperparams &h) {
    if (!(h.lambda >= 0.0) || !std::isfinite(h.lambda)) throw ValidationError("train.lambda must be >= 0");
    if (!(h.beta >= 0.0) || !std::isfinite(h.beta)) throw ValidationError("train.beta must be >= 0");
    if (!(h.learning_rate > 0.0) || !std::isfinite(h.learning_rate))
        throw ValidationError("train.learning_rate must be > 0");
    if (!(h.momentum >= 0.0 && h.momentum < 1.0)) throw ValidationError("train.momentum must lie in [0, 1)");
    if (h.batch_size == 0) throw ValidationError("train.batch_size must be >= 1");
    if (!(h.dropout_rate >= 0.0 && h.dropout_rate < 1.0)) throw ValidationError("net.dropout must lie in [0, 1)");
    if (h.mc_passes < 2) throw ValidationError("uncertainty.mc_passes must be >= 2");
    if (h.hidden_dims.empty()) throw ValidationError("net.hidden_dims must not be empty");
    for (std::size_t d : h.hidden_dims)
        if (d == 0) throw ValidationError("net.hidden_dims entries must be positive");
}

std::vector<PairFeatures> featurize_corpus(const Corpus &corpus, const FeatureConfig &config) {
    validate(config);
    std::vector<PairFeatures> out;
    out.reserve(corpus.size());
    for (const Sample &s : corpus.samples)
        out.push_back({featurize_pair(s.context, s.generation, config), featurize_pair(s.context, s.reference, config)});
    return out;
}

std::pair<double, double> dev_objective(const ModelParams &params, std::span<const PairFeatures> pairs) {
    if (pairs.empty()) throw ValidationError("dev objective needs at least one pair");
    double log_acc = 0.0, p_acc = 0.0;
    for (const auto &pf : pairs) {
        ForwardTrace t = forward_pair(params, pf.gen, pf.ref, ForwardMode::eval, 0);
        const double p = pair_softmax(t.raw_score_gen, t.raw_score_ref).p_reference;
        log_acc += std::log(p);
        p_acc += p;
    }
    const auto n = static_cast<double>(pairs.size());
    return {log_acc / n, p_acc / n};
}

double mean_gradient_penalty(const ModelParams &params, std::span<const PairFeatures> pairs) {
    if (pairs.empty()) throw ValidationError("gradient penalty needs at least one pair");
    double acc = 0.0;
    for (const auto &pf : pairs) acc += gradient_penalty(params, pf.gen, pf.ref, false).value;
    return acc / static_cast<double>(pairs.size());
}

namespace {

struct SampleStep {
    double p_prime = 1.0;
    double c = 1.0;
};

// Task and confidence terms for one pair; accumulates scale * gradient.
SampleStep task_step(const ModelParams &params, const PairFeatures &pf, double lambda, double scale,
                     std::uint64_t dropout_seed, ModelParams &grads) {
    ForwardTrace t = forward_pair(params, pf.gen, pf.ref, ForwardMode::train, dropout_seed);
    const PairScores s = pair_softmax(t.raw_score_gen, t.raw_score_ref);
    const double c_raw = sigmoid(t.confidence_logit);
    const double c = std::clamp(c_raw, kConfidenceFloor, 1.0);
    const double p_prime = adjusted_probability(s.p_reference, c);

    // d(-log p')/d p_ref = -c / p';  d p_ref / d raw_ref = p_ref * p_gen.
    const double d_pref = -c / p_prime;
    const double d_raw_ref = d_pref * s.p_reference * s.p_generated;
    // d/dc [-log p' - lambda log c] = (1 - p_ref) / p' - lambda / c;  dc/dz = c (1 - c).
    double d_logit = 0.0;
    if (c_raw > kConfidenceFloor) d_logit = (1.0 - s.p_reference) / p_prime * c * (1.0 - c) - lambda * (1.0 - c);

    OutputGrads up{-d_raw_ref * scale, d_raw_ref * scale, d_logit * scale};
    backward_into(params, t, up, grads, 1.0);
    return {p_prime, c};
}

bool finite(const LossBreakdown &l) {
    return std::isfinite(l.l_task) && std::isfinite(l.l_conf) && std::isfinite(l.gp) && std::isfinite(l.total);
}

} // namespace

TrainedModel train(const Corpus &train_set, const Corpus &dev_set, const FeatureConfig &features,
                   const Hyperparams &hyper, std::uint64_t seed) {
    if (train_set.empty()) throw ValidationError("training set is empty");
    if (dev_set.empty()) throw ValidationError("dev set is empty");
    validate(features);
    validate(hyper);

    TrainedModel model;
    model.features = features;
    model.hyper = hyper;
    model.seed = seed;
    model.params = init_model(features.input_dim(), hyper.hidden_dims, hyper.dropout_rate, seed);
    if (hyper.epochs == 0) return model;

    const std::vector<PairFeatures> train_pairs = featurize_corpus(train_set, features);
    const std::vector<PairFeatures> dev_pairs = featurize_corpus(dev_set, features);

    ModelParams params = model.params;
    SgdOptimizer optimizer(hyper.learning_rate, hyper.momentum);
    double best_dev = -std::numeric_limits<double>::infinity();
    std::uint64_t step = 0;
    const std::size_t n = train_pairs.size();
    std::vector<std::size_t> order(n);

    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle(derive_seed(seed, "batch", epoch));
        for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

        LossBreakdown epoch_sum;
        std::size_t batches = 0;
        for (std::size_t start = 0, b = 1; start < n; start += hyper.batch_size, ++b) {
            const std::size_t end = std::min(n, start + hyper.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);

            ModelParams grads = zeros_like(params);
            std::vector<double> p_primes, cs;
            double gp_sum = 0.0;
            try {
                for (std::size_t k = start; k < end; ++k) {
                    const PairFeatures &pf = train_pairs[order[k]];
                    SampleStep st =
                        task_step(params, pf, hyper.lambda, scale, derive_seed(seed, "dropout", step), grads);
                    p_primes.push_back(st.p_prime);
                    cs.push_back(st.c);

                    Eigen::VectorXd gen = pf.gen, ref = pf.ref;
                    if (hyper.gp_mode == GpMode::interpolated) {
                        const double eps = Rng(derive_seed(seed, "gp", step)).uniform();
                        gen = eps * pf.gen + (1.0 - eps) * pf.ref;
                        ref = eps * pf.ref + (1.0 - eps) * pf.gen;
                    }
                    gp_sum += penalty_impl(params, gen, ref, hyper.beta > 0.0 ? &grads : nullptr, hyper.beta * scale).value;
                    ++step;
                }
            } catch (const NumericError &e) {
                throw TrainingError(epoch, b, e.what());
            }

            BatchLog log;
            log.epoch = epoch;
            log.batch = b;
            log.size = end - start;
            log.loss = combine_losses(loss_task(p_primes), loss_confidence(cs), gp_sum * scale, hyper.lambda,
                                      hyper.beta);
            log.mean_c = std::accumulate(cs.begin(), cs.end(), 0.0) * scale;
            if (!finite(log.loss)) throw TrainingError(epoch, b, "non-finite loss");
            try {
                optimizer.step(params, grads);
            } catch (const NumericError &e) {
                throw TrainingError(epoch, b, e.what());
            }

            epoch_sum.l_task += log.loss.l_task;
            epoch_sum.l_conf += log.loss.l_conf;
            epoch_sum.gp += log.loss.gp;
            ++batches;
            model.log.batches.push_back(log);
        }

        EpochLog elog;
        elog.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(batches);
        elog.mean_loss = combine_losses(epoch_sum.l_task * inv, epoch_sum.l_conf * inv, epoch_sum.gp * inv,
                                        hyper.lambda, hyper.beta);
        std::tie(elog.dev_mean_log_p_reference, elog.dev_mean_p_reference) = dev_objective(params, dev_pairs);
        if (!std::isfinite(elog.dev_mean_log_p_reference)) throw TrainingError(epoch, batches, "non-finite dev objective");
        model.log.epochs.push_back(elog);

        if (elog.dev_mean_log_p_reference > best_dev) {
            best_dev = elog.dev_mean_log_p_reference;
            model.params = params;
            model.log.best_epoch = epoch;
        }
    }
    return model;
}

// ---------------------------------------------------------------------------

void check_compatible(const TrainedModel &model, const FeatureConfig &features) {
    if (!(model.features == features) || config_hash(model.features) != config_hash(features))
        throw CompatibilityError("model was trained with feature config " + canonical_string(model.features) +
                                 " but " + canonical_string(features) + " was requested");
}

namespace {

struct PairEval {
    double p_generated;
    double p_reference;
    double c;
    double m;
};

PairEval eval_pair(const ModelParams &params, const Eigen::VectorXd &gen, const Eigen::VectorXd &ref,
                   std::size_t passes, std::uint64_t mc_seed) {
    ForwardTrace t = forward_pair(params, gen, ref, ForwardMode::eval, 0);
    const PairScores s = pair_softmax(t.raw_score_gen, t.raw_score_ref);
    const double c = std::clamp(sigmoid(t.confidence_logit), kConfidenceFloor, 1.0);
    const double m = model_confidence(params, gen, ref, passes, mc_seed);
    return {s.p_generated, s.p_reference, c, m};
}

} // namespace

SystemReport evaluate_system(const TrainedModel &model, const Corpus &test_set, const EvalOptions &options,
                             std::uint64_t seed) {
    if (test_set.empty()) throw ValidationError("test set is empty");
    if (model.params.input_dim() != model.features.input_dim())
        throw ValidationError("model input dimension does not match its feature config");
    validate(test_set);

    SystemReport report;
    report.weight_mode = options.weight_mode;
    report.mc_passes = options.mc_passes;
    report.seed = seed;
    const FeatureConfig &fc = model.features;
    const std::size_t n = test_set.size();
    std::vector<PartialRecord> partial(n);
    report.records.resize(n);

    if (test_set.kind == CorpusKind::conditional) {
        report.references_per_generation = 1;
        for (std::size_t i = 0; i < n; ++i) {
            const Sample &s = test_set.samples[i];
            const PairEval e = eval_pair(model.params, featurize_pair(s.context, s.generation, fc),
                                         featurize_pair(s.context, s.reference, fc), options.mc_passes,
                                         derive_seed(seed, "mc/" + s.id));
            report.records[i] = {s.id, e.p_generated, e.p_reference, e.c, e.m, 0.0};
        }
    } else {
        const std::size_t k = options.references_per_generation;
        report.references_per_generation = k;
        const auto pairing = pair_indices(n, n, k, derive_seed(seed, "pair"));
        std::vector<Eigen::VectorXd> ref_feats;
        ref_feats.reserve(n);
        for (const Sample &s : test_set.samples) ref_feats.push_back(featurize_pair("", s.reference, fc));
        for (std::size_t i = 0; i < n; ++i) {
            const Sample &s = test_set.samples[i];
            const Eigen::VectorXd gen = featurize_pair("", s.generation, fc);
            PairEval acc{0.0, 0.0, 0.0, 0.0};
            for (std::size_t j = 0; j < k; ++j) {
                const PairEval e = eval_pair(model.params, gen, ref_feats[pairing[i][j]], options.mc_passes,
                                             derive_seed(seed, "mc/" + s.id + "/" + std::to_string(j)));
                acc.p_generated += e.p_generated;
                acc.p_reference += e.p_reference;
                acc.c += e.c;
                acc.m += e.m;
            }
            const double inv = 1.0 / static_cast<double>(k);
            report.records[i] = {s.id, acc.p_generated * inv, acc.p_reference * inv, acc.c * inv, acc.m * inv, 0.0};
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        partial[i] = {report.records[i].p_generated, report.records[i].c, report.records[i].m};
    SystemScore score = system_score(partial, options.weight_mode);
    report.p_sys = score.p_sys;
    for (std::size_t i = 0; i < n; ++i) report.records[i].w = score.weights[i];
    return report;
}

} // namespace perception
