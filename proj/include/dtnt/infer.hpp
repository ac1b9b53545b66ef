#pragma once

#include <cstdint>
#include <vector>

#include "dtnt/optim.hpp"

namespace dtnt {

struct InferenceConfig {
    int iterations = 1000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    bool forecast = false;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamParams adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct TrackingResult {
    std::vector<PointCloud> transformed;       // one per consecutive pair
    std::vector<CorrespondenceMap> maps;       // one per consecutive pair
    std::vector<double> pair_chamfer;
    StateBank bank;
};

// Test-time latent optimization: a fresh Gaussian bank is fitted with Adam
// over the states only; the decoder parameters and omega stay frozen.
StateBank fit_latents(const TrainedModel& model, const std::vector<PointCloud>& frames,
                      const InferenceConfig& config, const TrainLogFn& log = nullptr);

// fit_latents followed by the per-pair readout: flow each frame forward,
// match it to the next frame by nearest neighbor, record the Chamfer value.
TrackingResult track(const TrainedModel& model, const std::vector<PointCloud>& frames,
                     const InferenceConfig& config);

// Readout only, for a bank that is already fitted.
TrackingResult track_with_bank(const TrainedModel& model, const std::vector<PointCloud>& frames,
                               StateBank bank);

// Three observed frames in, the predicted fourth frame out: latents are
// fitted on the two observed transitions and the last frame is flowed
// forward with its own descriptor.
PointCloud forecast(const TrainedModel& model, const std::vector<PointCloud>& observed,
                    const InferenceConfig& config);

}  // namespace dtnt
