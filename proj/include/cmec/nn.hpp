#pragma once

#include <span>
#include <string>
#include <vector>

#include "cmec/scenario.hpp"

namespace cmec::nn {

/// Fully connected network: ReLU on hidden layers, linear output.
/// Parameters are one flat vector; layer l stores W_l input-major (element
/// (i, o) at i * out + o) followed by b_l.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<int> layer_sizes);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
    std::size_t param_count() const { return params_.size(); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    /// He-uniform weights, zero biases.
    void init(Rng& rng);

    std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
    std::size_t bias_offset(int layer) const;

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

/// Activations cached by a batch forward pass for the backward pass.
/// acts[0] is the input; acts[l + 1] the post-activation output of layer l.
struct Workspace {
    int batch = 0;
    std::vector<std::vector<double>> acts;
};

/// OpenMP kernels. Inputs and outputs are row-major batch x features.
void forward_batch(const Mlp& net, std::span<const double> inputs, int batch, Workspace& ws);
/// Overwrites `grad` with dLoss/dparams given dLoss/doutputs in `d_out`.
void backward_batch(const Mlp& net, const Workspace& ws, std::span<const double> d_out,
                    std::span<double> grad);
std::span<const double> outputs(const Workspace& ws);

/// Per-sample reference implementations with plain loops, kept for tests
/// and benchmarks.
namespace serial {
std::vector<double> forward(const Mlp& net, std::span<const double> input);
void forward_batch(const Mlp& net, std::span<const double> inputs, int batch, Workspace& ws);
void backward_batch(const Mlp& net, const Workspace& ws, std::span<const double> d_out,
                    std::span<double> grad);
}  // namespace serial

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer(const std::string& s);
std::string to_string(OptimizerKind k);

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learn_rate, std::size_t param_count);
    void step(std::span<double> params, std::span<const double> grad);
    OptimizerKind kind() const { return kind_; }

private:
    OptimizerKind kind_;
    double lr_;
    long long t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace cmec::nn
