#pragma once

// Minimal dense network with exact manual backpropagation. Hosts both the
// feature extractor and the critic. Layers: affine, optional ReLU, optional
// row-wise l2 normalization on the final output.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "abc/common.hpp"

namespace abc {

enum class Activation : uint8_t { none = 0, relu = 1 };

struct DenseNetSpec {
    // layer_sizes[0] is the input dim; each later entry is a layer output dim.
    std::vector<uint32_t> layer_sizes;
    // One activation per layer transition (layer_sizes.size() - 1 entries).
    std::vector<Activation> activations;
    bool final_l2_normalize = false;

    std::size_t num_layers() const { return layer_sizes.size() - 1; }
    void validate() const;

    // [in, hidden..., out] with ReLU on hidden transitions, linear output.
    static DenseNetSpec mlp(const std::vector<uint32_t>& sizes, bool l2_head);
};

struct ModelParams {
    std::vector<Matrix> weights;             // weights[l] is out x in
    std::vector<std::vector<double>> biases;
    // rmsprop squared-gradient accumulators, lazily sized on first use
    std::vector<Matrix> weight_acc;
    std::vector<std::vector<double>> bias_acc;
    uint64_t init_seed = 0;

    void check_shapes(const DenseNetSpec& spec) const;
};

struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre_activations;   // per layer
    std::vector<Matrix> activations;       // per layer, post-activation
    Matrix pre_normalize;                  // output before the l2 head (if any)
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    Matrix inputs;  // dL/d(batch input)
};

enum class OptimAlgo { sgd, rmsprop };

struct OptimConfig {
    OptimAlgo algorithm = OptimAlgo::sgd;
    double learning_rate = 0.001;
    double decay = 0.9;     // rmsprop accumulator decay
    double epsilon = 1e-8;
};

ModelParams init_params(const DenseNetSpec& spec, uint64_t rng_seed);

// Critic-oriented initialization for weight-clipped training. The first
// layer becomes a bank of single-coordinate kink features with thresholds
// spread over [0, 1.25 * input_scale] and alternating signs; remaining
// layers start small inside the clip box and the output layer starts at
// zero. A dense gaussian init saturates at the clip boundary on the first
// clip and the hidden layer never learns kink positions after that.
ModelParams init_critic_params(const DenseNetSpec& spec, uint64_t rng_seed, double clip_c,
                               double input_scale);

Matrix forward(const ModelParams& params, const DenseNetSpec& spec,
               const Matrix& batch, ForwardTrace* trace = nullptr);

Gradients backward(const ModelParams& params, const DenseNetSpec& spec,
                   const ForwardTrace& trace, const Matrix& grad_outputs);

void optimizer_step(ModelParams& params, const Gradients& grads, const OptimConfig& config);

void clip_weights(ModelParams& params, double c);

double max_abs_param(const ModelParams& params);

// Central finite differences over every parameter; returns the max relative
// error against the analytic gradient. loss_fn maps net outputs to
// (loss, dloss/doutputs).
using LossFn = std::function<std::pair<double, Matrix>(const Matrix& outputs)>;
double grad_check(const DenseNetSpec& spec, const ModelParams& params,
                  const LossFn& loss_fn, const Matrix& batch, double fd_step);

// "ABCM" checkpoint: magic, u32 version=1, spec, then f64 params in layer
// order (weights row-major, then bias).
void save_checkpoint(const ModelParams& params, const DenseNetSpec& spec,
                     const std::string& path);
std::pair<ModelParams, DenseNetSpec> load_checkpoint(const std::string& path);

}  // namespace abc
