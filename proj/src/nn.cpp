#include "cmec/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cmec::nn {

namespace {

// Below this many multiply-adds a layer is not worth a parallel region.
constexpr std::size_t kParallelWork = 1 << 14;

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need input and output sizes");
    for (int s : sizes_) {
        if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
    }
    std::size_t off = 0;
    for (int l = 0; l < layer_count(); ++l) {
        offsets_.push_back(off);
        off += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(off, 0.0);
}

std::size_t Mlp::bias_offset(int layer) const {
    return offsets_[static_cast<std::size_t>(layer)] +
           static_cast<std::size_t>(sizes_[layer + 1]) * sizes_[layer];
}

void Mlp::init(Rng& rng) {
    for (int l = 0; l < layer_count(); ++l) {
        const double bound = std::sqrt(6.0 / sizes_[l]);
        std::uniform_real_distribution<double> u(-bound, bound);
        const std::size_t w = weight_offset(l);
        const std::size_t b = bias_offset(l);
        for (std::size_t i = w; i < b; ++i) params_[i] = u(rng);
        for (int o = 0; o < sizes_[l + 1]; ++o) params_[b + o] = 0.0;
    }
}

std::span<const double> outputs(const Workspace& ws) { return ws.acts.back(); }

void forward_batch(const Mlp& net, std::span<const double> inputs, int batch, Workspace& ws) {
    const auto& sizes = net.layer_sizes();
    if (inputs.size() != static_cast<std::size_t>(batch) * net.input_size()) {
        throw std::invalid_argument("forward_batch: input size mismatch");
    }
    ws.batch = batch;
    ws.acts.resize(sizes.size());
    ws.acts[0].assign(inputs.begin(), inputs.end());
    const auto p = net.params();
    for (int l = 0; l < net.layer_count(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        const bool hidden = l + 1 < net.layer_count();
        const double* w = p.data() + net.weight_offset(l);
        const double* b = p.data() + net.bias_offset(l);
        const double* x = ws.acts[l].data();
        auto& y = ws.acts[l + 1];
        y.resize(static_cast<std::size_t>(batch) * out);
        const bool par = static_cast<std::size_t>(batch) * in * out >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
        for (int n = 0; n < batch; ++n) {
            const double* xn = x + static_cast<std::size_t>(n) * in;
            double* yn = y.data() + static_cast<std::size_t>(n) * out;
            std::copy(b, b + out, yn);
            for (int i = 0; i < in; ++i) {
                const double xi = xn[i];
                if (xi == 0.0) continue;  // one-hot inputs and ReLU zeros
                const double* wi = w + static_cast<std::size_t>(i) * out;
#pragma omp simd
                for (int o = 0; o < out; ++o) yn[o] += wi[o] * xi;
            }
            if (hidden) {
                for (int o = 0; o < out; ++o) yn[o] = std::max(0.0, yn[o]);
            }
        }
    }
}

void backward_batch(const Mlp& net, const Workspace& ws, std::span<const double> d_out,
                    std::span<double> grad) {
    const auto& sizes = net.layer_sizes();
    const int batch = ws.batch;
    if (d_out.size() != static_cast<std::size_t>(batch) * net.output_size() ||
        grad.size() != net.param_count()) {
        throw std::invalid_argument("backward_batch: size mismatch");
    }
    const auto p = net.params();
    std::vector<double> delta(d_out.begin(), d_out.end());
    std::vector<double> prev;
    for (int l = net.layer_count() - 1; l >= 0; --l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        const double* x = ws.acts[l].data();
        double* gw = grad.data() + net.weight_offset(l);
        double* gb = grad.data() + net.bias_offset(l);
        const bool par = static_cast<std::size_t>(batch) * in * out >= kParallelWork;

        // Weight rows are owned by one thread each and the batch is summed in
        // order, so the result does not depend on the thread count.
#pragma omp parallel for schedule(static) if (par)
        for (int i = 0; i < in; ++i) {
            double* gwi = gw + static_cast<std::size_t>(i) * out;
            std::fill(gwi, gwi + out, 0.0);
            for (int n = 0; n < batch; ++n) {
                const double xi = x[static_cast<std::size_t>(n) * in + i];
                if (xi == 0.0) continue;
                const double* dn = delta.data() + static_cast<std::size_t>(n) * out;
#pragma omp simd
                for (int o = 0; o < out; ++o) gwi[o] += xi * dn[o];
            }
        }
        std::fill(gb, gb + out, 0.0);
        for (int n = 0; n < batch; ++n) {
            const double* dn = delta.data() + static_cast<std::size_t>(n) * out;
            for (int o = 0; o < out; ++o) gb[o] += dn[o];
        }
        if (l == 0) break;

        const double* w = p.data() + net.weight_offset(l);
        prev.assign(static_cast<std::size_t>(batch) * in, 0.0);
#pragma omp parallel for schedule(static) if (par)
        for (int n = 0; n < batch; ++n) {
            const double* dn = delta.data() + static_cast<std::size_t>(n) * out;
            const double* xn = x + static_cast<std::size_t>(n) * in;
            double* pn = prev.data() + static_cast<std::size_t>(n) * in;
            for (int i = 0; i < in; ++i) {
                if (xn[i] <= 0.0) continue;  // ReLU gate
                const double* wi = w + static_cast<std::size_t>(i) * out;
                double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                for (int o = 0; o < out; ++o) acc += wi[o] * dn[o];
                pn[i] = acc;
            }
        }
        delta.swap(prev);
    }
}

namespace serial {

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
    const auto& sizes = net.layer_sizes();
    const auto p = net.params();
    std::vector<double> x(input.begin(), input.end());
    for (int l = 0; l < net.layer_count(); ++l) {
        std::vector<double> y(static_cast<std::size_t>(sizes[l + 1]));
        for (int o = 0; o < sizes[l + 1]; ++o) {
            double acc = p[net.bias_offset(l) + o];
            for (int i = 0; i < sizes[l]; ++i) {
                acc += p[net.weight_offset(l) + static_cast<std::size_t>(i) * sizes[l + 1] + o] * x[i];
            }
            y[o] = (l + 1 < net.layer_count()) ? std::max(0.0, acc) : acc;
        }
        x.swap(y);
    }
    return x;
}

void forward_batch(const Mlp& net, std::span<const double> inputs, int batch, Workspace& ws) {
    const auto& sizes = net.layer_sizes();
    const auto p = net.params();
    ws.batch = batch;
    ws.acts.assign(sizes.size(), {});
    ws.acts[0].assign(inputs.begin(), inputs.end());
    for (int l = 0; l < net.layer_count(); ++l) {
        ws.acts[l + 1].assign(static_cast<std::size_t>(batch) * sizes[l + 1], 0.0);
    }
    for (int n = 0; n < batch; ++n) {
        for (int l = 0; l < net.layer_count(); ++l) {
            const int in = sizes[l];
            const int out = sizes[l + 1];
            for (int o = 0; o < out; ++o) {
                double acc = p[net.bias_offset(l) + o];
                for (int i = 0; i < in; ++i) {
                    acc += p[net.weight_offset(l) + static_cast<std::size_t>(i) * out + o] *
                           ws.acts[l][static_cast<std::size_t>(n) * in + i];
                }
                ws.acts[l + 1][static_cast<std::size_t>(n) * out + o] =
                    (l + 1 < net.layer_count()) ? std::max(0.0, acc) : acc;
            }
        }
    }
}

void backward_batch(const Mlp& net, const Workspace& ws, std::span<const double> d_out,
                    std::span<double> grad) {
    const auto& sizes = net.layer_sizes();
    const auto p = net.params();
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int n = 0; n < ws.batch; ++n) {
        const int out_size = net.output_size();
        std::vector<double> delta(d_out.begin() + static_cast<std::ptrdiff_t>(n) * out_size,
                                  d_out.begin() + static_cast<std::ptrdiff_t>(n + 1) * out_size);
        for (int l = net.layer_count() - 1; l >= 0; --l) {
            const int in = sizes[l];
            const int out = sizes[l + 1];
            const double* x = ws.acts[l].data() + static_cast<std::size_t>(n) * in;
            for (int o = 0; o < out; ++o) {
                for (int i = 0; i < in; ++i) {
                    grad[net.weight_offset(l) + static_cast<std::size_t>(i) * out + o] += delta[o] * x[i];
                }
                grad[net.bias_offset(l) + o] += delta[o];
            }
            if (l == 0) break;
            std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
            for (int i = 0; i < in; ++i) {
                if (x[i] <= 0.0) continue;
                for (int o = 0; o < out; ++o) {
                    prev[i] += p[net.weight_offset(l) + static_cast<std::size_t>(i) * out + o] * delta[o];
                }
            }
            delta.swap(prev);
        }
    }
}

}  // namespace serial

OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer '" + s + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

Optimizer::Optimizer(OptimizerKind kind, double learn_rate, std::size_t param_count)
    : kind_(kind), lr_(learn_rate) {
    if (!(learn_rate > 0.0)) throw std::invalid_argument("Optimizer: learn rate must be positive");
    if (kind_ == OptimizerKind::Adam) {
        m_.assign(param_count, 0.0);
        v_.assign(param_count, 0.0);
    }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
    if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
        return;
    }
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
}

}  // namespace cmec::nn
