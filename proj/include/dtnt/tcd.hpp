#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace dtnt {

// Per-frame learnable latent states s_i plus the trainable temporal weight.
// All states share dimension dim.
struct StateBank {
    std::vector<Eigen::VectorXd> states;
    double omega = 0.5;
    int dim = 0;

    int frames() const { return static_cast<int>(states.size()); }
};

// Temporal correspondence descriptors derived from a StateBank:
//   z_1 = s_1,  z_i = (1 - omega) z_{i-1} + omega s_i  for i > 1.
struct TcdSequence {
    std::vector<Eigen::VectorXd> descriptors;
};

// Each state component drawn i.i.d. standard normal from the seed.
StateBank init_state_bank(int frames, int dim, double omega_init, std::uint64_t seed);

TcdSequence compute_tcds(const StateBank& bank);

struct TcdGrad {
    std::vector<Eigen::VectorXd> d_states;
    double d_omega = 0.0;
};

// Exact adjoints of compute_tcds for upstream gradients d_z.
TcdGrad backprop_tcds(const StateBank& bank, const std::vector<Eigen::VectorXd>& d_z);

// Flat views over the states, for the optimizer and finite-difference checks.
Eigen::VectorXd flatten_states(const StateBank& bank);
void unflatten_states(StateBank& bank, const Eigen::VectorXd& flat);

}  // namespace dtnt
