#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dtnt/geometry.hpp"

namespace dtnt {

enum class MotionKind { RigidTranslate, RigidRotate, Bend, Twist, Breathe, TwoSegmentArm };
enum class TemplateKind { GridSlab, Cylinder, Sphere };

std::string to_string(MotionKind kind);
std::string to_string(TemplateKind kind);
MotionKind parse_motion_kind(const std::string& name);      // ConfigError on unknown
TemplateKind parse_template_kind(const std::string& name);  // ConfigError on unknown

// Number of pose parameters each kind interpolates over time.
int pose_dim(MotionKind kind);

struct MotionSpec {
    MotionKind kind = MotionKind::RigidTranslate;
    TemplateKind template_kind = TemplateKind::GridSlab;
    int frames = 4;
    int points = 2000;
    double amplitude = 0.3;
    std::uint64_t seed = 0;
    // optional explicit endpoints; when empty, both are drawn from the seed
    // within the amplitude bounds
    std::vector<double> pose_start;
    std::vector<double> pose_end;
};

struct CorruptionSpec {
    double noise_sigma = 0.0;  // additive isotropic Gaussian per coordinate
    int partial_count = 0;     // retained points per frame; 0 keeps all
    std::uint64_t seed = 0;
};

// A deforming sequence with exact dense ground truth. source_index[i][k] is
// the original template index of point k in frame i (identity until points
// are dropped by corruption), so correspondence between any two frames is
// recoverable exactly.
struct GroundTruthSequence {
    std::vector<PointCloud> frames;
    std::vector<std::vector<std::size_t>> source_index;
    std::vector<std::vector<double>> pose_params;   // per frame
    std::vector<double> motion_constants;           // e.g. rotation axis
    NormTransform normalization;                    // template space -> stored coordinates
    MotionSpec spec;
    CorruptionSpec corruption;                      // zeros when clean
};

// The analytic deformation applied to one template point (pre-normalization).
Vec3 deform_point(MotionKind kind, const Vec3& template_point, const std::vector<double>& pose,
                  const std::vector<double>& constants);

// Samples template points once, draws/uses pose endpoints, interpolates the
// pose linearly over the frames, deforms, then normalizes the union of all
// frames into the unit cube centered at the origin.
GroundTruthSequence generate(const MotionSpec& spec);

// Per-frame independent noise and/or subsampling; provenance is preserved.
GroundTruthSequence corrupt(const GroundTruthSequence& seq, const CorruptionSpec& c);

// Writes one directory per sequence (frame_0001.xyz ..., gt_0001.corr ...,
// manifest.json); with windows set, overlapping 4-frame windows are emitted
// as win_01 ... subdirectories. An optional corruption is applied to every
// sequence with a per-sequence derived seed.
void make_dataset(const std::vector<MotionSpec>& specs, bool windows,
                  const std::filesystem::path& dir, const CorruptionSpec* corruption = nullptr);

void write_sequence_dir(const std::filesystem::path& dir, const GroundTruthSequence& seq,
                        bool windows = false);
GroundTruthSequence load_sequence_dir(const std::filesystem::path& dir);

// Frames only (any directory holding frame_*.xyz), for tracking arbitrary data.
std::vector<PointCloud> load_frames_dir(const std::filesystem::path& dir);

// Sequence subdirectories of a dataset root, sorted by name.
std::vector<std::filesystem::path> list_sequence_dirs(const std::filesystem::path& dataset_dir);

// A contiguous window [start, start + length) of a sequence, provenance kept.
GroundTruthSequence slice_window(const GroundTruthSequence& seq, std::size_t start,
                                 std::size_t length);

}  // namespace dtnt
