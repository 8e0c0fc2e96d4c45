#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "perception/corpus.hpp"
#include "perception/featurizer.hpp"
#include "perception/tinynet.hpp"
#include "perception/uncertainty.hpp"

namespace perception {

/// Softmax over the two raw critic scores.
struct PairScores {
    double p_generated = 0.5;
    double p_reference = 0.5;
};

/// Computed as the logistic of the score gap: the smaller probability is
/// exact down to DBL_MIN, the larger one is its complement capped at the
/// largest double below 1, so both stay strictly inside (0, 1).
PairScores pair_softmax(double raw_gen, double raw_ref);

double sigmoid(double z);

inline constexpr double kConfidenceFloor = 1e-12;

/// p' = c * p_reference + (1 - c), with c clamped to [1e-12, 1].
double adjusted_probability(double p_reference, double c);

/// Mean of -log(p') over the batch.
double loss_task(std::span<const double> p_prime);

/// Mean of -log(c) over the batch.
double loss_confidence(std::span<const double> c);

struct LossBreakdown {
    double l_task = 0.0;
    double l_conf = 0.0;
    double gp = 0.0;
    double total = 0.0;
};

/// total = l_task + lambda * l_conf + beta * gp.
LossBreakdown combine_losses(double l_task, double l_conf, double gp, double lambda, double beta);

// ---------------------------------------------------------------------------
// Gradient penalty

enum class GpMode { pairs, interpolated };

std::string_view to_string(GpMode mode);
GpMode parse_gp_mode(std::string_view name);

/// D(gen, ref) = raw_ref - raw_gen with dropout disabled.
double critic_difference(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                         const Eigen::Ref<const Eigen::VectorXd> &ref);

/// Gradient of D with respect to [gen; ref].
Eigen::VectorXd critic_input_gradient(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                                      const Eigen::Ref<const Eigen::VectorXd> &ref);

struct GradientPenalty {
    double value = 0.0;     // (||g|| - 1)^2
    double grad_norm = 0.0; // ||g||
    ModelParams param_grads;
};

inline constexpr double kGpDifferenceStep = 1e-4;

/// Penalty at one (gen, ref) point. The parameter gradient uses
///   d||g||/dtheta = d/dtheta [g(theta) . u],  u = g / ||g|| held fixed,
/// and g . u is the directional derivative of D along u in input space, so it
/// equals the central difference of the ordinary parameter gradient of D at
/// the inputs shifted by +/- kGpDifferenceStep * u. When g = 0 the parameter
/// gradient is taken to be zero.
GradientPenalty gradient_penalty(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                                 const Eigen::Ref<const Eigen::VectorXd> &ref, bool want_param_grads = true);

// ---------------------------------------------------------------------------
// Training and evaluation

struct Hyperparams {
    double lambda = 0.5;
    double beta = 10.0;
    double learning_rate = 0.05;
    double momentum = 0.0;
    std::size_t epochs = 15;
    std::size_t batch_size = 4;
    double dropout_rate = 0.1;
    std::size_t mc_passes = 20;
    std::vector<std::size_t> hidden_dims{128, 64};
    GpMode gp_mode = GpMode::pairs;
};

void validate(const Hyperparams &hyper);

struct BatchLog {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    std::size_t size = 0;
    LossBreakdown loss;
    double mean_c = 0.0;
};

struct EpochLog {
    std::size_t epoch = 0;
    LossBreakdown mean_loss;
    double dev_mean_log_p_reference = 0.0;
    double dev_mean_p_reference = 0.0;
};

struct TrainingLog {
    std::vector<EpochLog> epochs;
    std::vector<BatchLog> batches;
    std::size_t best_epoch = 0; // 0 = initial parameters
};

struct TrainedModel {
    ModelParams params;
    FeatureConfig features;
    Hyperparams hyper;
    std::uint64_t seed = 0;
    TrainingLog log;
};

struct PairFeatures {
    Eigen::VectorXd gen;
    Eigen::VectorXd ref;
};

/// gen = featurize_pair(context, generation), ref = featurize_pair(context, reference).
std::vector<PairFeatures> featurize_corpus(const Corpus &corpus, const FeatureConfig &config);

/// Mini-batch training of the critic on L = L_t + lambda L_c + beta GP.
/// Batches come from a per-epoch permutation (stream "batch"), dropout masks
/// from stream "dropout" indexed by a global sample counter. After each
/// epoch the dev set is scored in eval mode; the parameters of the epoch with
/// the highest dev mean log p_reference are returned (earliest on ties).
TrainedModel train(const Corpus &train_set, const Corpus &dev_set, const FeatureConfig &features,
                   const Hyperparams &hyper, std::uint64_t seed);

/// Eval-mode mean of log p_reference and of p_reference.
std::pair<double, double> dev_objective(const ModelParams &params, std::span<const PairFeatures> pairs);

/// Mean (||g|| - 1)^2 over the pairs, dropout disabled.
double mean_gradient_penalty(const ModelParams &params, std::span<const PairFeatures> pairs);

struct EvalOptions {
    std::size_t mc_passes = 20;
    WeightMode weight_mode = WeightMode::literal;
    std::size_t references_per_generation = 4; // unconditional corpora only
};

/// Per-sample eval-mode scores, data confidence c, MC-dropout model
/// confidence m (seeded per sample id, so record order does not matter) and
/// the weighted system score. Unconditional corpora pair each generation
/// with `references_per_generation` references from the same corpus and
/// average the per-pair values.
SystemReport evaluate_system(const TrainedModel &model, const Corpus &test_set, const EvalOptions &options,
                             std::uint64_t seed);

/// Throws CompatibilityError when the model was trained on a different
/// feature layout.
void check_compatible(const TrainedModel &model, const FeatureConfig &features);

} // namespace perception
