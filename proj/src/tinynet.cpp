#include "perception/tinynet.hpp"

#include <cmath>
#include <string>

#include "perception/error.hpp"
#include "perception/rng.hpp"

namespace perception {

namespace {

DenseLayer make_layer(std::size_t out, std::size_t in, Rng &rng) {
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.symmetric(bound);
    return layer;
}

DenseLayer zero_layer(const DenseLayer &like) {
    return {Eigen::MatrixXd::Zero(like.weight.rows(), like.weight.cols()), Eigen::VectorXd::Zero(like.bias.size())};
}

MemberTrace run_trunk(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &input, bool dropout,
                      Rng &rng) {
    MemberTrace t;
    const std::size_t depth = params.trunk.size();
    t.layer_inputs.reserve(depth);
    t.tanh_values.reserve(depth);
    const double keep_scale = 1.0 / (1.0 - params.dropout_rate);

    Eigen::VectorXd x = input;
    for (const DenseLayer &layer : params.trunk) {
        Eigen::VectorXd a = (layer.weight * x + layer.bias).array().tanh().matrix();
        t.layer_inputs.push_back(std::move(x));
        if (dropout) {
            Eigen::VectorXd mask(a.size());
            for (Eigen::Index j = 0; j < mask.size(); ++j)
                mask[j] = rng.uniform() >= params.dropout_rate ? keep_scale : 0.0;
            x = a.cwiseProduct(mask);
            t.masks.push_back(std::move(mask));
        } else {
            x = a;
        }
        t.tanh_values.push_back(std::move(a));
    }
    t.output = std::move(x);
    return t;
}

// Propagates d(loss)/d(trunk output) down to the member input, accumulating
// parameter gradients when requested.
Eigen::VectorXd trunk_backward(const ModelParams &params, const MemberTrace &t, Eigen::VectorXd grad_out,
                               ModelParams *grads, double scale) {
    for (std::size_t l = params.trunk.size(); l-- > 0;) {
        if (!t.masks.empty()) grad_out.array() *= t.masks[l].array();
        Eigen::VectorXd grad_pre = grad_out.array() * (1.0 - t.tanh_values[l].array().square());
        if (grads) {
            grads->trunk[l].weight.noalias() += (scale * grad_pre) * t.layer_inputs[l].transpose();
            grads->trunk[l].bias += scale * grad_pre;
        }
        grad_out.noalias() = params.trunk[l].weight.transpose() * grad_pre;
    }
    return grad_out;
}

bool all_finite(const ModelParams &p) {
    for (auto block : parameter_blocks(p))
        for (double v : block)
            if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

std::size_t ModelParams::input_dim() const {
    return trunk.empty() ? 0 : static_cast<std::size_t>(trunk.front().weight.cols());
}

std::size_t ModelParams::trunk_dim() const {
    return trunk.empty() ? 0 : static_cast<std::size_t>(trunk.back().weight.rows());
}

std::vector<std::size_t> ModelParams::hidden_dims() const {
    std::vector<std::size_t> dims;
    for (const auto &layer : trunk) dims.push_back(static_cast<std::size_t>(layer.weight.rows()));
    return dims;
}

ModelParams init_model(std::size_t input_dim, const std::vector<std::size_t> &hidden_dims, double dropout_rate,
                       std::uint64_t seed) {
    if (input_dim == 0 || input_dim % 2 != 0)
        throw ValidationError("input dimension must be a positive multiple of 2 (two feature segments)");
    if (hidden_dims.empty()) throw ValidationError("at least one hidden layer is required");
    for (std::size_t h : hidden_dims)
        if (h == 0) throw ValidationError("hidden layer widths must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");

    Rng rng(derive_seed(seed, "init"));
    ModelParams p;
    p.dropout_rate = dropout_rate;
    std::size_t fan_in = input_dim;
    for (std::size_t h : hidden_dims) {
        p.trunk.push_back(make_layer(h, fan_in, rng));
        fan_in = h;
    }
    p.score_head = make_layer(1, fan_in, rng);
    p.confidence_head = make_layer(1, 2 * fan_in, rng);
    return p;
}

void validate(const ModelParams &p) {
    if (p.trunk.empty()) throw ValidationError("model has no trunk layers");
    Eigen::Index fan_in = p.trunk.front().weight.cols();
    for (std::size_t l = 0; l < p.trunk.size(); ++l) {
        const auto &layer = p.trunk[l];
        if (layer.weight.cols() != fan_in || layer.bias.size() != layer.weight.rows())
            throw ValidationError("trunk layer " + std::to_string(l) + " has inconsistent shape");
        fan_in = layer.weight.rows();
    }
    if (p.score_head.weight.rows() != 1 || p.score_head.weight.cols() != fan_in || p.score_head.bias.size() != 1)
        throw ValidationError("score head shape does not match the trunk");
    if (p.confidence_head.weight.rows() != 1 || p.confidence_head.weight.cols() != 2 * fan_in ||
        p.confidence_head.bias.size() != 1)
        throw ValidationError("confidence head shape does not match the trunk");
    if (!(p.dropout_rate >= 0.0 && p.dropout_rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    if (!all_finite(p)) throw NumericError("model parameters contain non-finite values");
}

ModelParams zeros_like(const ModelParams &p) {
    ModelParams z;
    for (const auto &layer : p.trunk) z.trunk.push_back(zero_layer(layer));
    z.score_head = zero_layer(p.score_head);
    z.confidence_head = zero_layer(p.confidence_head);
    z.dropout_rate = p.dropout_rate;
    return z;
}

std::size_t parameter_count(const ModelParams &p) {
    std::size_t n = 0;
    for (auto block : parameter_blocks(p)) n += block.size();
    return n;
}

namespace {

template <class Params, class Span>
std::vector<Span> blocks_of(Params &p) {
    std::vector<Span> out;
    auto push = [&](auto &layer) {
        out.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
        out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    };
    for (auto &layer : p.trunk) push(layer);
    push(p.score_head);
    push(p.confidence_head);
    return out;
}

} // namespace

std::vector<std::span<double>> parameter_blocks(ModelParams &p) {
    return blocks_of<ModelParams, std::span<double>>(p);
}

std::vector<std::span<const double>> parameter_blocks(const ModelParams &p) {
    return blocks_of<const ModelParams, std::span<const double>>(p);
}

void add_scaled(ModelParams &into, const ModelParams &grads, double scale) {
    auto dst = parameter_blocks(into);
    auto src = parameter_blocks(grads);
    if (dst.size() != src.size()) throw ValidationError("parameter structure mismatch");
    for (std::size_t b = 0; b < dst.size(); ++b) {
        if (dst[b].size() != src[b].size()) throw ValidationError("parameter shape mismatch");
        for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += scale * src[b][i];
    }
}

ForwardTrace forward_pair(const ModelParams &params, const Eigen::Ref<const Eigen::VectorXd> &gen,
                          const Eigen::Ref<const Eigen::VectorXd> &ref, ForwardMode mode, std::uint64_t seed) {
    const auto in = static_cast<Eigen::Index>(params.input_dim());
    if (gen.size() != in || ref.size() != in)
        throw ValidationError("feature length " + std::to_string(gen.size()) + "/" + std::to_string(ref.size()) +
                              " does not match model input dimension " + std::to_string(in));

    const bool dropout = mode != ForwardMode::eval && params.dropout_rate > 0.0;
    Rng rng(seed);
    ForwardTrace t;
    t.mode = mode;
    t.revision = params.revision;
    t.gen = run_trunk(params, gen, dropout, rng);
    t.ref = run_trunk(params, ref, dropout, rng);

    const auto h = static_cast<Eigen::Index>(params.trunk_dim());
    const auto &sw = params.score_head.weight;
    const auto &cw = params.confidence_head.weight;
    t.raw_score_gen = sw.row(0).dot(t.gen.output) + params.score_head.bias[0];
    t.raw_score_ref = sw.row(0).dot(t.ref.output) + params.score_head.bias[0];
    t.confidence_logit = cw.row(0).head(h).dot(t.gen.output) + cw.row(0).tail(h).dot(t.ref.output) +
                         params.confidence_head.bias[0];

    if (!std::isfinite(t.raw_score_gen) || !std::isfinite(t.raw_score_ref) || !std::isfinite(t.confidence_logit))
        throw NumericError("forward pass produced a non-finite output");
    return t;
}

namespace {

Gradients backward_impl(const ModelParams &params, const ForwardTrace &trace, const OutputGrads &up,
                        ModelParams *pg, double scale) {
    if (trace.revision != params.revision || trace.gen.layer_inputs.size() != params.trunk.size() ||
        trace.gen.output.size() != static_cast<Eigen::Index>(params.trunk_dim()))
        throw ValidationError("stale trace: parameters changed since the forward pass");
    if (pg && (pg->trunk.size() != params.trunk.size() || pg->score_head.weight.cols() != params.score_head.weight.cols()))
        throw ValidationError("gradient buffer does not match the model shape");

    const auto h = static_cast<Eigen::Index>(params.trunk_dim());
    const auto sw = params.score_head.weight.row(0).transpose();
    const auto cw = params.confidence_head.weight.row(0).transpose();

    if (pg) {
        pg->score_head.weight.row(0) +=
            scale * (up.raw_score_gen * trace.gen.output + up.raw_score_ref * trace.ref.output).transpose();
        pg->score_head.bias[0] += scale * (up.raw_score_gen + up.raw_score_ref);
        pg->confidence_head.weight.row(0).head(h) += (scale * up.confidence_logit) * trace.gen.output.transpose();
        pg->confidence_head.weight.row(0).tail(h) += (scale * up.confidence_logit) * trace.ref.output.transpose();
        pg->confidence_head.bias[0] += scale * up.confidence_logit;
    }

    Gradients g;
    Eigen::VectorXd grad_gen = up.raw_score_gen * sw + up.confidence_logit * cw.head(h);
    Eigen::VectorXd grad_ref = up.raw_score_ref * sw + up.confidence_logit * cw.tail(h);
    g.input_gen = trunk_backward(params, trace.gen, std::move(grad_gen), pg, scale);
    g.input_ref = trunk_backward(params, trace.ref, std::move(grad_ref), pg, scale);
    return g;
}

} // namespace

Gradients backward(const ModelParams &params, const ForwardTrace &trace, const OutputGrads &up,
                   bool want_param_grads) {
    if (!want_param_grads) return backward_impl(params, trace, up, nullptr, 1.0);
    ModelParams pg = zeros_like(params);
    Gradients g = backward_impl(params, trace, up, &pg, 1.0);
    g.params = std::move(pg);
    return g;
}

Gradients backward_into(const ModelParams &params, const ForwardTrace &trace, const OutputGrads &up,
                        ModelParams &into, double scale) {
    return backward_impl(params, trace, up, &into, scale);
}

ModelParams sgd_step(const ModelParams &params, const ModelParams &grads, double learning_rate) {
    if (!all_finite(grads)) throw NumericError("non-finite gradient in parameter update");
    ModelParams next = params;
    add_scaled(next, grads, -learning_rate);
    ++next.revision;
    return next;
}

void SgdOptimizer::step(ModelParams &params, const ModelParams &grads) {
    if (momentum_ == 0.0) {
        params = sgd_step(params, grads, learning_rate_);
        return;
    }
    if (!all_finite(grads)) throw NumericError("non-finite gradient in parameter update");
    if (!has_velocity_) {
        velocity_ = zeros_like(params);
        has_velocity_ = true;
    }
    auto v = parameter_blocks(velocity_);
    auto gb = parameter_blocks(grads);
    for (std::size_t b = 0; b < v.size(); ++b)
        for (std::size_t i = 0; i < v[b].size(); ++i) v[b][i] = momentum_ * v[b][i] + gb[b][i];
    add_scaled(params, velocity_, -learning_rate_);
    ++params.revision;
}

} // namespace perception
