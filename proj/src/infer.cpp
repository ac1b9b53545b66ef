#include "dtnt/infer.hpp"

#include "dtnt/error.hpp"
#include "dtnt/rng.hpp"

namespace dtnt {

StateBank fit_latents(const TrainedModel& model, const std::vector<PointCloud>& frames,
                      const InferenceConfig& config, const TrainLogFn& log) {
    if (frames.size() < 2) throw SequenceTooShortError("fit_latents: need at least 2 frames");
    if (config.iterations < 1) throw ConfigError("fit_latents: iterations must be at least 1");
    if (config.learning_rate <= 0.0) throw ConfigError("fit_latents: learning_rate must be positive");
    for (const PointCloud& f : frames) validate_cloud(f);

    StateBank bank = init_state_bank(static_cast<int>(frames.size()), model.decoder.dim,
                                     model.omega, mix_seed(config.seed, 2));

    std::vector<NeighborIndex> target_indexes;
    target_indexes.reserve(frames.size() - 1);
    for (std::size_t i = 1; i < frames.size(); ++i) target_indexes.emplace_back(frames[i]);
    std::vector<const NeighborIndex*> idx;
    idx.reserve(target_indexes.size());
    for (const auto& t : target_indexes) idx.push_back(&t);

    const AdamParams hp = config.adam();
    AdamState state;
    for (int it = 0; it < config.iterations; ++it) {
        const SequenceGrads grads = sequence_loss(model.decoder, bank, frames, idx);
        Eigen::VectorXd flat = flatten_states(bank);
        Eigen::VectorXd g(flat.size());
        Eigen::Index pos = 0;
        for (const auto& ds : grads.d_states) {
            g.segment(pos, bank.dim) = ds;
            pos += bank.dim;
        }
        adam_step(flat, g, state, hp);
        unflatten_states(bank, flat);
        if (log) log(it + 1, grads.loss, bank.omega);
    }
    return bank;
}

TrackingResult track_with_bank(const TrainedModel& model, const std::vector<PointCloud>& frames,
                               StateBank bank) {
    if (frames.size() < 2) throw SequenceTooShortError("track: need at least 2 frames");
    if (bank.frames() != static_cast<int>(frames.size())) {
        throw ShapeError("track: bank frames do not match sequence length");
    }

    const TcdSequence z = compute_tcds(bank);

    TrackingResult result;
    result.bank = std::move(bank);
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        const FlowField field = predict_flow(model.decoder, frames[i], z.descriptors[i]);
        PointCloud transformed = apply_flow(frames[i], field);
        transformed.frame_index = frames[i + 1].frame_index;
        result.maps.push_back(extract_correspondence(transformed, frames[i + 1]));
        result.pair_chamfer.push_back(chamfer(transformed, frames[i + 1]));
        result.transformed.push_back(std::move(transformed));
    }
    return result;
}

TrackingResult track(const TrainedModel& model, const std::vector<PointCloud>& frames,
                     const InferenceConfig& config) {
    return track_with_bank(model, frames, fit_latents(model, frames, config));
}

PointCloud forecast(const TrainedModel& model, const std::vector<PointCloud>& observed,
                    const InferenceConfig& config) {
    if (observed.size() != 3) {
        throw ProtocolError("forecast: exactly 3 observed frames required, got " +
                            std::to_string(observed.size()));
    }
    // fit s_1..s_3 on the two observed transitions; the unseen frame is
    // predicted by flowing the last observed frame with its own descriptor
    const StateBank bank = fit_latents(model, observed, config);
    const TcdSequence z = compute_tcds(bank);
    const FlowField field = predict_flow(model.decoder, observed[2], z.descriptors[2]);
    PointCloud prediction = apply_flow(observed[2], field);
    prediction.frame_index = observed[2].frame_index + 1;
    return prediction;
}

}  // namespace dtnt
