#include "dtnt/optim.hpp"

#include <cmath>
#include <numeric>

#include "dtnt/error.hpp"
#include "dtnt/rng.hpp"

namespace dtnt {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamParams& hp) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient size mismatch");
    if (state.m.size() == 0) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
        state.t = 0;
    }
    if (state.m.size() != params.size()) throw ShapeError("adam_step: state size mismatch");

    state.t += 1;
    state.m = hp.beta1 * state.m + (1.0 - hp.beta1) * grads;
    state.v = hp.beta2 * state.v + (1.0 - hp.beta2) * grads.cwiseProduct(grads);
    const double m_corr = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double v_corr = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    params -= hp.learning_rate *
              ((state.m / m_corr).array() / ((state.v / v_corr).array().sqrt() + hp.epsilon)).matrix();
}

void validate_config(const TrainConfig& config) {
    if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (config.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (config.iterations < 1) throw ConfigError("iterations must be at least 1");
    if (config.dz < 1) throw ConfigError("dz must be positive");
    if (config.points_per_frame < 1) throw ConfigError("points_per_frame must be positive");
    if (config.layer_widths.empty() || config.layer_widths.back() != 3) {
        throw ConfigError("layer_widths must end with output width 3");
    }
    for (int w : config.layer_widths) {
        if (w < 1) throw ConfigError("layer_widths entries must be positive");
    }
}

SequenceGrads sequence_loss(const FlowDecoder& decoder, const StateBank& bank,
                            const std::vector<PointCloud>& frames) {
    std::vector<const NeighborIndex*> none;
    return sequence_loss(decoder, bank, frames, none);
}

SequenceGrads sequence_loss(const FlowDecoder& decoder, const StateBank& bank,
                            const std::vector<PointCloud>& frames,
                            const std::vector<const NeighborIndex*>& target_indexes) {
    const std::size_t frame_count = frames.size();
    if (frame_count < 2) throw SequenceTooShortError("sequence_loss: need at least 2 frames");
    if (bank.frames() != static_cast<int>(frame_count)) {
        throw ShapeError("sequence_loss: bank frames do not match sequence length");
    }
    if (!target_indexes.empty() && target_indexes.size() != frame_count - 1) {
        throw ShapeError("sequence_loss: target index count mismatch");
    }

    const TcdSequence z = compute_tcds(bank);

    SequenceGrads out;
    out.d_phi = zero_gradients(decoder.net);
    std::vector<Eigen::VectorXd> d_z(frame_count, Eigen::VectorXd::Zero(bank.dim));

    FlowCache cache;
    for (std::size_t i = 0; i + 1 < frame_count; ++i) {
        const FlowField field = predict_flow(decoder, frames[i], z.descriptors[i], cache);
        const PointCloud transformed = apply_flow(frames[i], field);

        std::pair<double, std::vector<Vec3>> chamfer_result =
            target_indexes.empty()
                ? chamfer_with_gradient(transformed, frames[i + 1])
                : chamfer_with_gradient(transformed, frames[i + 1], *target_indexes[i]);

        out.loss += chamfer_result.first;
        // d transformed/d displacement is the identity, so the Chamfer
        // gradient feeds flow_backward directly
        FlowBackwardResult back =
            flow_backward(decoder, frames[i], z.descriptors[i], cache, chamfer_result.second);
        out.d_phi.add(back.param_grads);
        d_z[i] += back.d_z;
    }

    TcdGrad tcd_grad = backprop_tcds(bank, d_z);
    out.d_states = std::move(tcd_grad.d_states);
    out.d_omega = tcd_grad.d_omega;
    return out;
}

TrainedModel train(const std::vector<std::vector<PointCloud>>& dataset, const TrainConfig& config,
                   const TrainLogFn& log, const CheckpointFn& checkpoint,
                   std::int64_t start_iteration) {
    validate_config(config);
    if (dataset.empty()) throw EmptyDatasetError("train: dataset is empty");

    std::vector<int> sizes;
    sizes.push_back(3 + config.dz);
    for (int w : config.layer_widths) sizes.push_back(w);

    TrainedModel model;
    model.decoder = FlowDecoder(init_mlp(sizes, mix_seed(config.seed, 1)), config.dz);
    model.omega = config.omega_init;
    model.config = config;
    model.banks.reserve(dataset.size());
    for (const auto& sequence : dataset) {
        if (sequence.size() < 2) throw SequenceTooShortError("train: sequence with fewer than 2 frames");
        // one shared init stream: identical sequences start from identical banks
        model.banks.push_back(init_state_bank(static_cast<int>(sequence.size()), config.dz,
                                              config.omega_init, mix_seed(config.seed, 2)));
    }
    return train_from(std::move(model), dataset, config, log, checkpoint, start_iteration);
}

TrainedModel train_from(TrainedModel model, const std::vector<std::vector<PointCloud>>& dataset,
                        const TrainConfig& config, const TrainLogFn& log,
                        const CheckpointFn& checkpoint, std::int64_t start_iteration) {
    validate_config(config);
    if (dataset.empty()) throw EmptyDatasetError("train: dataset is empty");
    if (model.banks.size() != dataset.size()) {
        throw ShapeError("train: model bank count does not match dataset");
    }
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        if (dataset[s].size() < 2) throw SequenceTooShortError("train: sequence with fewer than 2 frames");
        if (model.banks[s].frames() != static_cast<int>(dataset[s].size())) {
            throw ShapeError("train: bank frames do not match sequence length");
        }
    }

    const std::size_t sequence_count = dataset.size();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                                    sequence_count);

    // visit order: a seed-derived permutation walked round-robin
    std::vector<std::size_t> order(sequence_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    {
        Rng rng(mix_seed(config.seed, 3));
        for (std::size_t i = sequence_count; i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
    }

    // nearest-neighbor indexes over the fixed target frames are reused
    std::vector<std::vector<NeighborIndex>> target_indexes(sequence_count);
    for (std::size_t s = 0; s < sequence_count; ++s) {
        target_indexes[s].reserve(dataset[s].size() - 1);
        for (std::size_t i = 1; i < dataset[s].size(); ++i) {
            target_indexes[s].emplace_back(dataset[s][i]);
        }
    }

    const AdamParams hp = config.adam();
    AdamState phi_state;
    AdamState omega_state;
    std::vector<AdamState> bank_states(sequence_count);

    Eigen::VectorXd phi = flatten_params(model.decoder.net);
    Eigen::VectorXd omega_vec(1);

    const double inv_batch = 1.0 / static_cast<double>(batch);

    for (std::int64_t it = 0; it < config.iterations; ++it) {
        GradientBuffer phi_grad = zero_gradients(model.decoder.net);
        double omega_grad = 0.0;
        double batch_loss = 0.0;

        std::vector<std::size_t> drawn(batch);
        const std::size_t phase = static_cast<std::size_t>(start_iteration + it) * batch;
        for (std::size_t j = 0; j < batch; ++j) {
            drawn[j] = order[(phase + j) % sequence_count];
        }

        std::vector<SequenceGrads> grads(batch);
        for (std::size_t j = 0; j < batch; ++j) {
            const std::size_t s = drawn[j];
            model.banks[s].omega = model.omega;
            std::vector<const NeighborIndex*> idx;
            idx.reserve(target_indexes[s].size());
            for (const auto& t : target_indexes[s]) idx.push_back(&t);
            grads[j] = sequence_loss(model.decoder, model.banks[s], dataset[s], idx);
            batch_loss += grads[j].loss;
            phi_grad.add(grads[j].d_phi);
            omega_grad += grads[j].d_omega;
        }
        batch_loss *= inv_batch;

        // decoder + omega: averaged over the batch
        Eigen::VectorXd phi_g = flatten_grads(model.decoder.net, phi_grad) * inv_batch;
        adam_step(phi, phi_g, phi_state, hp);
        unflatten_params(model.decoder.net, phi);

        if (config.optimize_omega) {
            omega_vec[0] = model.omega;
            Eigen::VectorXd og(1);
            og[0] = omega_grad * inv_batch;
            adam_step(omega_vec, og, omega_state, hp);
            model.omega = omega_vec[0];
        }

        // each drawn sequence's states take their own (batch-scaled) gradient
        for (std::size_t j = 0; j < batch; ++j) {
            const std::size_t s = drawn[j];
            StateBank& bank = model.banks[s];
            Eigen::VectorXd flat = flatten_states(bank);
            Eigen::VectorXd g(flat.size());
            Eigen::Index pos = 0;
            for (const auto& ds : grads[j].d_states) {
                g.segment(pos, bank.dim) = ds * inv_batch;
                pos += bank.dim;
            }
            adam_step(flat, g, bank_states[s], hp);
            unflatten_states(bank, flat);
        }

        model.iterations_done = start_iteration + it + 1;
        if (log) log(model.iterations_done, batch_loss, model.omega);
        if (checkpoint && config.checkpoint_every > 0 &&
            (it + 1) % config.checkpoint_every == 0) {
            checkpoint(model.iterations_done, model);
        }
    }
    return model;
}

}  // namespace dtnt
