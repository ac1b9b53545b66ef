#include "dtnt/tcd.hpp"

#include <cmath>

#include "dtnt/error.hpp"
#include "dtnt/rng.hpp"

namespace dtnt {

StateBank init_state_bank(int frames, int dim, double omega_init, std::uint64_t seed) {
    if (frames < 2) throw SequenceTooShortError("init_state_bank: need at least 2 frames");
    if (dim < 1) throw ShapeError("init_state_bank: dim must be positive");
    if (!std::isfinite(omega_init)) throw ConfigError("init_state_bank: omega_init must be finite");
    Rng rng(seed);
    StateBank bank;
    bank.dim = dim;
    bank.omega = omega_init;
    bank.states.resize(static_cast<std::size_t>(frames));
    for (auto& s : bank.states) {
        s.resize(dim);
        for (int d = 0; d < dim; ++d) s[d] = rng.normal();
    }
    return bank;
}

TcdSequence compute_tcds(const StateBank& bank) {
    if (bank.frames() < 2) throw SequenceTooShortError("compute_tcds: bank has fewer than 2 frames");
    TcdSequence z;
    z.descriptors.resize(bank.states.size());
    z.descriptors[0] = bank.states[0];
    for (std::size_t i = 1; i < bank.states.size(); ++i) {
        z.descriptors[i] = (1.0 - bank.omega) * z.descriptors[i - 1] + bank.omega * bank.states[i];
    }
    return z;
}

TcdGrad backprop_tcds(const StateBank& bank, const std::vector<Eigen::VectorXd>& d_z) {
    const std::size_t frames = bank.states.size();
    if (d_z.size() != frames) throw ShapeError("backprop_tcds: d_z length does not match bank frames");
    for (const auto& g : d_z) {
        if (g.size() != bank.dim) throw ShapeError("backprop_tcds: d_z entry dimension mismatch");
    }

    const TcdSequence z = compute_tcds(bank);

    TcdGrad out;
    out.d_states.resize(frames);
    out.d_omega = 0.0;

    // run the adjoint backwards: g accumulates the total derivative w.r.t. z_i
    Eigen::VectorXd g = Eigen::VectorXd::Zero(bank.dim);
    for (std::size_t i = frames; i-- > 0;) {
        if (i + 1 < frames) {
            g = d_z[i] + (1.0 - bank.omega) * g;
        } else {
            g = d_z[i];
        }
        if (i == 0) {
            out.d_states[0] = g;
        } else {
            out.d_states[i] = bank.omega * g;
            out.d_omega += g.dot(bank.states[i] - z.descriptors[i - 1]);
        }
    }
    return out;
}

Eigen::VectorXd flatten_states(const StateBank& bank) {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(bank.states.size()) * bank.dim);
    Eigen::Index pos = 0;
    for (const auto& s : bank.states) {
        flat.segment(pos, bank.dim) = s;
        pos += bank.dim;
    }
    return flat;
}

void unflatten_states(StateBank& bank, const Eigen::VectorXd& flat) {
    if (flat.size() != static_cast<Eigen::Index>(bank.states.size()) * bank.dim) {
        throw ShapeError("unflatten_states: size mismatch");
    }
    Eigen::Index pos = 0;
    for (auto& s : bank.states) {
        s = flat.segment(pos, bank.dim);
        pos += bank.dim;
    }
}

}  // namespace dtnt
