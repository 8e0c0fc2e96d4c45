#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace perception {

struct DenseLayer {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
};

/// Critic parameters. One tanh trunk is shared by both pair members; the
/// score head maps the trunk output to a raw realness score and the
/// confidence head maps [trunk(gen); trunk(ref)] to a data-confidence logit.
struct ModelParams {
    std::vector<DenseLayer> trunk;
    DenseLayer score_head;      // 1 x trunk_dim
    DenseLayer confidence_head; // 1 x 2*trunk_dim
    double dropout_rate = 0.0;
    // Bumped on every update so traces taken before it can be detected.
    std::uint64_t revision = 0;

    std::size_t input_dim() const;
    std::size_t trunk_dim() const;
    std::vector<std::size_t> hidden_dims() const;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn row-major
/// layer by layer (trunk, score head, confidence head) from
/// Rng(derive_seed(seed, "init")); biases zero.
ModelParams init_model(std::size_t input_dim, const std::vector<std::size_t> &hidden_dims, double dropout_rate,
                       std::uint64_t seed);

/// Shapes chain from input_dim, heads match the trunk, every entry finite.
void validate(const ModelParams &params);

ModelParams zeros_like(const ModelParams &params);
std::size_t parameter_count(const ModelParams &params);

/// Views over every weight and bias in a fixed order (trunk layers, score
/// head, confidence head; weight before bias; Eigen column-major storage).
std::vector<std::span<double>> parameter_blocks(ModelParams &params);
std::vector<std::span<const double>> parameter_blocks(const ModelParams &params);

/// into += scale * grads.
void add_scaled(ModelParams &into, const ModelParams &grads, double scale);

enum class ForwardMode { train, eval, mc_dropout };

struct MemberTrace {
    std::vector<Eigen::VectorXd> layer_inputs; // input to each trunk layer
    std::vector<Eigen::VectorXd> tanh_values;  // tanh(pre-activation), before the mask
    std::vector<Eigen::VectorXd> masks;        // empty when dropout is off
    Eigen::VectorXd output;                    // trunk output after the last mask
};

struct ForwardTrace {
    MemberTrace gen;
    MemberTrace ref;
    double raw_score_gen = 0.0;
    double raw_score_ref = 0.0;
    double confidence_logit = 0.0;
    ForwardMode mode = ForwardMode::eval;
    std::uint64_t revision = 0;
};

/// Runs the shared trunk on both members. In train and mc_dropout modes with
/// a positive dropout rate, inverted-dropout masks are drawn from Rng(seed):
/// all hidden layers of gen in order, then those of ref; unit j keeps with
/// value 1/(1-rate) when rng.uniform() >= rate, else 0.
ForwardTrace forward_pair(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                          const Eigen::Ref<const Eigen::VectorXd> &ref, ForwardMode mode, std::uint64_t seed);

struct OutputGrads {
    double raw_score_gen = 0.0;
    double raw_score_ref = 0.0;
    double confidence_logit = 0.0;
};

struct Gradients {
    ModelParams params; // empty layers when parameter gradients were not requested
    Eigen::VectorXd input_gen;
    Eigen::VectorXd input_ref;
};

/// Reverse-mode pass through both heads, the dropout masks and the tanh
/// trunk. Throws ValidationError if params changed since the trace was taken.
Gradients backward(const ModelParams &params, const ForwardTrace &trace, const OutputGrads &upstream,
                   bool want_param_grads = true);

/// Same pass, but adds `scale` times the parameter gradients into `into`
/// (shaped like params) instead of allocating; the returned params are empty.
Gradients backward_into(const ModelParams &params, const ForwardTrace &trace, const OutputGrads &upstream,
                        ModelParams &into, double scale);

/// params - learning_rate * grads, elementwise. Throws NumericError on
/// non-finite gradients.
ModelParams sgd_step(const ModelParams &params, const ModelParams &grads, double learning_rate);

/// Heavy-ball SGD; momentum 0 reduces exactly to sgd_step.
class SgdOptimizer {
  public:
    SgdOptimizer(double learning_rate, double momentum) : learning_rate_(learning_rate), momentum_(momentum) {}

    void step(ModelParams &params, const ModelParams &grads);

  private:
    double learning_rate_;
    double momentum_;
    ModelParams velocity_;
    bool has_velocity_ = false;
};

} // namespace perception
