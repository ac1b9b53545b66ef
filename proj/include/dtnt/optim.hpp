#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "dtnt/flow.hpp"
#include "dtnt/geometry.hpp"
#include "dtnt/tcd.hpp"

namespace dtnt {

// First/second moment accumulators for one flat parameter vector.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t t = 0;
};

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Canonical Adam with bias correction. Lazily sizes the state on first use.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamParams& hp);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;            // sequences per step
    int iterations = 1000;
    int dz = 128;
    int points_per_frame = 2000;
    std::uint64_t seed = 0;
    double omega_init = 0.5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // output width of each weight layer; the last entry must be 3
    std::vector<int> layer_widths = {256, 512, 1024, 2048, 512, 128, 3};
    // when false, omega stays at omega_init; with omega_init = 1 this is the
    // non-temporal variant (z_i == s_i)
    bool optimize_omega = true;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints

    AdamParams adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

void validate_config(const TrainConfig& config);

struct TrainedModel {
    FlowDecoder decoder;
    double omega = 0.5;
    std::vector<StateBank> banks;  // per training sequence, in dataset order
    TrainConfig config;
    std::int64_t iterations_done = 0;
};

struct SequenceGrads {
    double loss = 0.0;
    GradientBuffer d_phi;
    std::vector<Eigen::VectorXd> d_states;
    double d_omega = 0.0;
};

// Eq. 6 loss over one sequence: sum over consecutive pairs of the two-way
// Chamfer distance between the flowed frame and the next frame, with exact
// gradients for the decoder parameters, every state, and omega.
SequenceGrads sequence_loss(const FlowDecoder& decoder, const StateBank& bank,
                            const std::vector<PointCloud>& frames);

// As above, but reuses prebuilt target indexes (frames[1..T-1]); indexes[i]
// must cover frames[i+1].
SequenceGrads sequence_loss(const FlowDecoder& decoder, const StateBank& bank,
                            const std::vector<PointCloud>& frames,
                            const std::vector<const NeighborIndex*>& target_indexes);

using TrainLogFn = std::function<void(std::int64_t iteration, double loss, double omega)>;
using CheckpointFn = std::function<void(std::int64_t iteration, const TrainedModel& model)>;

// Joint optimization of decoder parameters, per-sequence states, and omega.
// Batches are drawn in a deterministic round-robin order derived from the
// seed; gradients are averaged over the batch, summed over a sequence's
// frame pairs. start_iteration offsets the log numbering when resuming.
TrainedModel train(const std::vector<std::vector<PointCloud>>& dataset, const TrainConfig& config,
                   const TrainLogFn& log = nullptr, const CheckpointFn& checkpoint = nullptr,
                   std::int64_t start_iteration = 0);

// Resume variant: continues from an existing decoder/omega/banks.
TrainedModel train_from(TrainedModel model, const std::vector<std::vector<PointCloud>>& dataset,
                        const TrainConfig& config, const TrainLogFn& log = nullptr,
                        const CheckpointFn& checkpoint = nullptr, std::int64_t start_iteration = 0);

}  // namespace dtnt
