#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace dtnt::cli {

// Stable exit codes; stderr carries diagnostics, stdout progress only.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitMissingFrames = 3;
constexpr int kExitShapeMismatch = 4;
constexpr int kExitProtocol = 5;
constexpr int kExitMisaligned = 6;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;       // overrides the config seed
    std::optional<std::string> out;          // overrides the config output dir
    bool quiet = false;
};

int run_generate(const std::filesystem::path& config_path, const GlobalOptions& opts);
int run_train(const std::filesystem::path& config_path, const GlobalOptions& opts);
int run_track(const std::filesystem::path& config_path, const GlobalOptions& opts);
int run_forecast(const std::filesystem::path& config_path, const GlobalOptions& opts);
int run_evaluate(const std::filesystem::path& config_path, const GlobalOptions& opts);
int run_ablate(const std::filesystem::path& config_path, const GlobalOptions& opts);

}  // namespace dtnt::cli
