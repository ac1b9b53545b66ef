#include "dtnt/diffnet.hpp"

#include <cmath>

#include "dtnt/error.hpp"
#include "dtnt/rng.hpp"

namespace dtnt {

void GradientBuffer::add(const GradientBuffer& other) {
    if (d_weights.size() != other.d_weights.size()) throw ShapeError("gradient buffers differ in layer count");
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
        d_weights[l] += other.d_weights[l];
        d_bias[l] += other.d_bias[l];
    }
}

void GradientBuffer::scale(double factor) {
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
        d_weights[l] *= factor;
        d_bias[l] *= factor;
    }
}

GradientBuffer zero_gradients(const MlpNetwork& net) {
    GradientBuffer g;
    g.d_weights.reserve(net.layers.size());
    g.d_bias.reserve(net.layers.size());
    for (const DenseLayer& layer : net.layers) {
        g.d_weights.push_back(Eigen::MatrixXd::Zero(layer.fan_out(), layer.fan_in()));
        g.d_bias.push_back(Eigen::VectorXd::Zero(layer.fan_out()));
    }
    return g;
}

MlpNetwork init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw ShapeError("init_mlp: need at least input and output sizes");
    for (int s : layer_sizes) {
        if (s < 1) throw ShapeError("init_mlp: layer sizes must be positive");
    }
    Rng rng(seed);
    MlpNetwork net;
    net.layers.reserve(layer_sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        DenseLayer layer;
        layer.weights.resize(fan_out, fan_in);
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = stddev * rng.normal();
        }
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Eigen::VectorXd forward(const MlpNetwork& net, const Eigen::VectorXd& input, ForwardCache& cache) {
    if (input.size() != net.input_size()) {
        throw ShapeError("forward: input length " + std::to_string(input.size()) +
                         " does not match first layer fan_in " + std::to_string(net.input_size()));
    }
    const std::size_t depth = net.layers.size();
    cache.pre.resize(depth);
    cache.acts.resize(depth + 1);
    cache.acts[0] = input;
    for (std::size_t l = 0; l < depth; ++l) {
        cache.pre[l].noalias() = net.layers[l].weights * cache.acts[l];
        cache.pre[l] += net.layers[l].bias;
        if (l + 1 < depth) {
            cache.acts[l + 1] = cache.pre[l].cwiseMax(0.0);
        } else {
            cache.acts[l + 1] = cache.pre[l];
        }
    }
    return cache.acts[depth];
}

Eigen::VectorXd forward(const MlpNetwork& net, const Eigen::VectorXd& input) {
    ForwardCache cache;
    return forward(net, input, cache);
}

namespace {

void check_cache(const MlpNetwork& net, const ForwardCache& cache) {
    const std::size_t depth = net.layers.size();
    if (cache.pre.size() != depth || cache.acts.size() != depth + 1) {
        throw CacheError("backward: cache does not match network depth");
    }
    for (std::size_t l = 0; l < depth; ++l) {
        if (cache.pre[l].size() != net.layers[l].fan_out() ||
            cache.acts[l].size() != net.layers[l].fan_in()) {
            throw CacheError("backward: cache shapes do not match network");
        }
    }
}

}  // namespace

void backward_accumulate(const MlpNetwork& net, const ForwardCache& cache,
                         const Eigen::VectorXd& d_output, GradientBuffer& acc,
                         Eigen::VectorXd& d_input) {
    const std::size_t depth = net.layers.size();
    check_cache(net, cache);
    if (d_output.size() != net.output_size()) throw ShapeError("backward: d_output length mismatch");
    if (acc.d_weights.size() != depth) throw ShapeError("backward: gradient buffer layer count mismatch");

    Eigen::VectorXd delta = d_output;  // gradient w.r.t. pre-activation of layer l
    Eigen::VectorXd d_act;
    for (std::size_t l = depth; l-- > 0;) {
        acc.d_weights[l].noalias() += delta * cache.acts[l].transpose();
        acc.d_bias[l] += delta;
        d_act.noalias() = net.layers[l].weights.transpose() * delta;
        if (l > 0) {
            // rectifier derivative: 1 where pre > 0, else 0 (including at 0)
            delta = d_act.cwiseProduct(
                (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
        } else {
            d_input = std::move(d_act);
        }
    }
}

BackwardResult backward(const MlpNetwork& net, const ForwardCache& cache,
                        const Eigen::VectorXd& d_output) {
    BackwardResult result;
    result.grads = zero_gradients(net);
    backward_accumulate(net, cache, d_output, result.grads, result.d_input);
    return result;
}

std::size_t param_count(const MlpNetwork& net) {
    std::size_t n = 0;
    for (const DenseLayer& layer : net.layers) {
        n += static_cast<std::size_t>(layer.weights.size()) + static_cast<std::size_t>(layer.bias.size());
    }
    return n;
}

Eigen::VectorXd flatten_params(const MlpNetwork& net) {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count(net)));
    Eigen::Index pos = 0;
    for (const DenseLayer& layer : net.layers) {
        for (int r = 0; r < layer.fan_out(); ++r) {
            for (int c = 0; c < layer.fan_in(); ++c) flat[pos++] = layer.weights(r, c);
        }
        for (int r = 0; r < layer.fan_out(); ++r) flat[pos++] = layer.bias[r];
    }
    return flat;
}

void unflatten_params(MlpNetwork& net, const Eigen::VectorXd& flat) {
    if (flat.size() != static_cast<Eigen::Index>(param_count(net))) {
        throw ShapeError("unflatten_params: size mismatch");
    }
    Eigen::Index pos = 0;
    for (DenseLayer& layer : net.layers) {
        for (int r = 0; r < layer.fan_out(); ++r) {
            for (int c = 0; c < layer.fan_in(); ++c) layer.weights(r, c) = flat[pos++];
        }
        for (int r = 0; r < layer.fan_out(); ++r) layer.bias[r] = flat[pos++];
    }
}

Eigen::VectorXd flatten_grads(const MlpNetwork& net, const GradientBuffer& grads) {
    if (grads.d_weights.size() != net.layers.size()) throw ShapeError("flatten_grads: layer count mismatch");
    Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count(net)));
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        for (int r = 0; r < layer.fan_out(); ++r) {
            for (int c = 0; c < layer.fan_in(); ++c) flat[pos++] = grads.d_weights[l](r, c);
        }
        for (int r = 0; r < layer.fan_out(); ++r) flat[pos++] = grads.d_bias[l][r];
    }
    return flat;
}

}  // namespace dtnt
