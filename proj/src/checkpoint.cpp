#include "dtnt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dtnt/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace dtnt {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'N', 'T'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::ifstream& in, const std::filesystem::path& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw IoError(path.string() + ": truncated checkpoint");
    }
    return v;
}

double get_f64(std::ifstream& in, const std::filesystem::path& path) {
    double v = 0.0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
        throw IoError(path.string() + ": truncated checkpoint");
    }
    return v;
}

void put_bank(std::ofstream& out, const StateBank& bank) {
    put_u32(out, static_cast<std::uint32_t>(bank.frames()));
    for (const auto& s : bank.states) {
        for (int d = 0; d < bank.dim; ++d) put_f64(out, s[d]);
    }
}

StateBank get_bank(std::ifstream& in, const std::filesystem::path& path, int dz, double omega) {
    const std::uint32_t frames = get_u32(in, path);
    if (frames < 2) throw IoError(path.string() + ": bank with fewer than 2 frames");
    StateBank bank;
    bank.dim = dz;
    bank.omega = omega;
    bank.states.resize(frames);
    for (auto& s : bank.states) {
        s.resize(dz);
        for (int d = 0; d < dz; ++d) s[d] = get_f64(in, path);
    }
    return bank;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    put_u32(out, static_cast<std::uint32_t>(ckpt.dz));
    put_u32(out, static_cast<std::uint32_t>(ckpt.net.layers.size()));
    for (const DenseLayer& layer : ckpt.net.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.fan_in()));
        put_u32(out, static_cast<std::uint32_t>(layer.fan_out()));
        for (int r = 0; r < layer.fan_out(); ++r) {
            for (int c = 0; c < layer.fan_in(); ++c) put_f64(out, layer.weights(r, c));
        }
        for (int r = 0; r < layer.fan_out(); ++r) put_f64(out, layer.bias[r]);
    }
    put_f64(out, ckpt.omega);
    put_u32(out, static_cast<std::uint32_t>(ckpt.banks.size()));
    for (const StateBank& bank : ckpt.banks) put_bank(out, bank);
    if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError(path.string() + ": bad checkpoint magic");
    }
    const int version = in.get();
    if (version != kVersion) {
        throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.dz = static_cast<int>(get_u32(in, path));
    const std::uint32_t layer_count = get_u32(in, path);
    ckpt.net.layers.resize(layer_count);
    for (DenseLayer& layer : ckpt.net.layers) {
        const std::uint32_t fan_in = get_u32(in, path);
        const std::uint32_t fan_out = get_u32(in, path);
        layer.weights.resize(fan_out, fan_in);
        for (std::uint32_t r = 0; r < fan_out; ++r) {
            for (std::uint32_t c = 0; c < fan_in; ++c) layer.weights(r, c) = get_f64(in, path);
        }
        layer.bias.resize(fan_out);
        for (std::uint32_t r = 0; r < fan_out; ++r) layer.bias[r] = get_f64(in, path);
    }
    ckpt.omega = get_f64(in, path);
    const std::uint32_t bank_count = get_u32(in, path);
    ckpt.banks.reserve(bank_count);
    for (std::uint32_t b = 0; b < bank_count; ++b) {
        ckpt.banks.push_back(get_bank(in, path, ckpt.dz, ckpt.omega));
    }
    return ckpt;
}

void save_latents(const std::filesystem::path& path, const StateBank& bank) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    put_bank(out, bank);
    if (!out) throw IoError("write failed for " + path.string());
}

StateBank load_latents(const std::filesystem::path& path, int dz, double omega) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return get_bank(in, path, dz, omega);
}

TrainedModel checkpoint_to_model(const Checkpoint& ckpt) {
    TrainedModel model;
    model.decoder = FlowDecoder(ckpt.net, ckpt.dz);
    model.omega = ckpt.omega;
    model.banks = ckpt.banks;
    model.config.dz = ckpt.dz;
    model.config.layer_widths.clear();
    for (const DenseLayer& layer : ckpt.net.layers) {
        model.config.layer_widths.push_back(layer.fan_out());
    }
    return model;
}

Checkpoint model_to_checkpoint(const TrainedModel& model) {
    Checkpoint ckpt;
    ckpt.dz = model.decoder.dim;
    ckpt.net = model.decoder.net;
    ckpt.omega = model.omega;
    ckpt.banks = model.banks;
    return ckpt;
}

}  // namespace dtnt
