#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace dtnt {

// weights is (fan_out x fan_in), bias has fan_out entries
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;

    int fan_in() const { return static_cast<int>(weights.cols()); }
    int fan_out() const { return static_cast<int>(weights.rows()); }
};

// Feed-forward net: rectifier on hidden layers, identity on the output.
struct MlpNetwork {
    std::vector<DenseLayer> layers;

    int input_size() const { return layers.front().fan_in(); }
    int output_size() const { return layers.back().fan_out(); }
};

// Per-layer gradients, shape-congruent with the network.
struct GradientBuffer {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_bias;

    void add(const GradientBuffer& other);
    void scale(double factor);
};

GradientBuffer zero_gradients(const MlpNetwork& net);

// acts[0] is the input; acts[l+1] is layer l's post-activation output.
struct ForwardCache {
    std::vector<Eigen::VectorXd> pre;
    std::vector<Eigen::VectorXd> acts;
};

// He-initialized weights (stddev sqrt(2/fan_in)), zero biases, fully
// determined by the seed. layer_sizes lists input width then each layer's
// output width.
MlpNetwork init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

Eigen::VectorXd forward(const MlpNetwork& net, const Eigen::VectorXd& input, ForwardCache& cache);
Eigen::VectorXd forward(const MlpNetwork& net, const Eigen::VectorXd& input);

struct BackwardResult {
    Eigen::VectorXd d_input;
    GradientBuffer grads;
};

// Exact reverse-mode derivatives; the rectifier derivative at 0 is 0.
BackwardResult backward(const MlpNetwork& net, const ForwardCache& cache,
                        const Eigen::VectorXd& d_output);

// Same derivatives, accumulated into an existing buffer (hot path for
// per-point loops).
void backward_accumulate(const MlpNetwork& net, const ForwardCache& cache,
                         const Eigen::VectorXd& d_output, GradientBuffer& acc,
                         Eigen::VectorXd& d_input);

// Flat parameter view (per layer: weights row-major, then bias). Used by the
// optimizer and by finite-difference checks.
std::size_t param_count(const MlpNetwork& net);
Eigen::VectorXd flatten_params(const MlpNetwork& net);
void unflatten_params(MlpNetwork& net, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_grads(const MlpNetwork& net, const GradientBuffer& grads);

}  // namespace dtnt
