#pragma once

#include <filesystem>
#include <vector>

#include "dtnt/optim.hpp"

namespace dtnt {

// Binary checkpoint: magic "DTNT", version byte 1, then little-endian
// D_z (u32), layer count (u32), per layer fan_in/fan_out (u32 each) followed
// by row-major weights then bias as f64, then omega (f64). A bank count
// (u32) and the serialized banks (T as u32, then T*D_z f64 values each)
// are appended; omega is not repeated per bank.
struct Checkpoint {
    int dz = 0;
    MlpNetwork net;
    double omega = 0.5;
    std::vector<StateBank> banks;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// .latents: one StateBank with the same layout as the appended bank record.
void save_latents(const std::filesystem::path& path, const StateBank& bank);
StateBank load_latents(const std::filesystem::path& path, int dz, double omega);

TrainedModel checkpoint_to_model(const Checkpoint& ckpt);
Checkpoint model_to_checkpoint(const TrainedModel& model);

}  // namespace dtnt
