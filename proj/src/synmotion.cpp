#include "dtnt/synmotion.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "dtnt/error.hpp"
#include "dtnt/io.hpp"
#include "dtnt/rng.hpp"

namespace dtnt {

using nlohmann::json;

std::string to_string(MotionKind kind) {
    switch (kind) {
        case MotionKind::RigidTranslate: return "rigid_translate";
        case MotionKind::RigidRotate: return "rigid_rotate";
        case MotionKind::Bend: return "bend";
        case MotionKind::Twist: return "twist";
        case MotionKind::Breathe: return "breathe";
        case MotionKind::TwoSegmentArm: return "two_segment_arm";
    }
    throw ConfigError("unknown motion kind");
}

std::string to_string(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::GridSlab: return "grid_slab";
        case TemplateKind::Cylinder: return "cylinder";
        case TemplateKind::Sphere: return "sphere";
    }
    throw ConfigError("unknown template kind");
}

MotionKind parse_motion_kind(const std::string& name) {
    if (name == "rigid_translate") return MotionKind::RigidTranslate;
    if (name == "rigid_rotate") return MotionKind::RigidRotate;
    if (name == "bend") return MotionKind::Bend;
    if (name == "twist") return MotionKind::Twist;
    if (name == "breathe") return MotionKind::Breathe;
    if (name == "two_segment_arm") return MotionKind::TwoSegmentArm;
    throw ConfigError("unknown motion kind '" + name + "'");
}

TemplateKind parse_template_kind(const std::string& name) {
    if (name == "grid_slab") return TemplateKind::GridSlab;
    if (name == "cylinder") return TemplateKind::Cylinder;
    if (name == "sphere") return TemplateKind::Sphere;
    throw ConfigError("unknown template kind '" + name + "'");
}

int pose_dim(MotionKind kind) {
    switch (kind) {
        case MotionKind::RigidTranslate: return 3;
        case MotionKind::RigidRotate: return 1;
        case MotionKind::Bend: return 1;
        case MotionKind::Twist: return 1;
        case MotionKind::Breathe: return 1;
        case MotionKind::TwoSegmentArm: return 2;
    }
    throw ConfigError("unknown motion kind");
}

namespace {

Eigen::Matrix3d axis_angle(const Vec3& axis, double angle) {
    Eigen::Matrix3d skew;
    skew << 0, -axis.z(), axis.y(),
            axis.z(), 0, -axis.x(),
            -axis.y(), axis.x(), 0;
    return Eigen::Matrix3d::Identity() + std::sin(angle) * skew +
           (1.0 - std::cos(angle)) * skew * skew;
}

Vec3 rot_x(double angle, const Vec3& p) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Vec3(p.x(), c * p.y() - s * p.z(), s * p.y() + c * p.z());
}

Vec3 rot_y(double angle, const Vec3& p) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Vec3(c * p.x() + s * p.z(), p.y(), -s * p.x() + c * p.z());
}

Vec3 rot_z(double angle, const Vec3& p) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Vec3(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
}

// slab extents; the z dimension is the thin one
constexpr double kSlabX = 1.0, kSlabY = 1.0, kSlabZ = 0.2;
constexpr double kCylinderRadius = 0.25;
constexpr double kSphereRadius = 0.5;

std::vector<Vec3> sample_template(TemplateKind kind, int n, Rng& rng) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n));
    switch (kind) {
        case TemplateKind::GridSlab: {
            // regular lattice; the first n sites in x-fastest order
            const double h = std::cbrt(kSlabX * kSlabY * kSlabZ / static_cast<double>(n));
            int nx = std::max(1, static_cast<int>(std::ceil(kSlabX / h)));
            int ny = std::max(1, static_cast<int>(std::ceil(kSlabY / h)));
            int nz = std::max(2, static_cast<int>(std::ceil(kSlabZ / h)));
            while (static_cast<long long>(nx) * ny * nz < n) ++nx;
            for (int iz = 0; iz < nz && static_cast<int>(pts.size()) < n; ++iz) {
                for (int iy = 0; iy < ny && static_cast<int>(pts.size()) < n; ++iy) {
                    for (int ix = 0; ix < nx && static_cast<int>(pts.size()) < n; ++ix) {
                        pts.emplace_back(-kSlabX / 2 + (ix + 0.5) * kSlabX / nx,
                                         -kSlabY / 2 + (iy + 0.5) * kSlabY / ny,
                                         -kSlabZ / 2 + (iz + 0.5) * kSlabZ / nz);
                    }
                }
            }
            break;
        }
        case TemplateKind::Cylinder: {
            // lateral surface, axis along z
            for (int i = 0; i < n; ++i) {
                const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
                const double z = rng.uniform(-0.5, 0.5);
                pts.emplace_back(kCylinderRadius * std::cos(theta),
                                 kCylinderRadius * std::sin(theta), z);
            }
            break;
        }
        case TemplateKind::Sphere: {
            for (int i = 0; i < n; ++i) {
                Vec3 g(rng.normal(), rng.normal(), rng.normal());
                if (g.norm() < 1e-12) g = Vec3(1, 0, 0);
                pts.push_back(g.normalized() * kSphereRadius);
            }
            break;
        }
    }
    return pts;
}

void check_pose(const std::vector<double>& pose, MotionKind kind, const char* which) {
    if (static_cast<int>(pose.size()) != pose_dim(kind)) {
        throw ConfigError(std::string(which) + " has " + std::to_string(pose.size()) +
                          " entries; kind '" + to_string(kind) + "' needs " +
                          std::to_string(pose_dim(kind)));
    }
    for (double v : pose) {
        if (!std::isfinite(v)) throw ConfigError(std::string(which) + " has a non-finite entry");
    }
}

}  // namespace

Vec3 deform_point(MotionKind kind, const Vec3& p, const std::vector<double>& pose,
                  const std::vector<double>& constants) {
    switch (kind) {
        case MotionKind::RigidTranslate:
            return p + Vec3(pose[0], pose[1], pose[2]);
        case MotionKind::RigidRotate: {
            const Vec3 axis(constants[0], constants[1], constants[2]);
            return axis_angle(axis, pose[0]) * p;
        }
        case MotionKind::Bend:
            // rotation about y grows linearly with the template height
            return rot_y(pose[0] * p.z(), p);
        case MotionKind::Twist:
            return rot_z(pose[0] * p.z(), p);
        case MotionKind::Breathe:
            return pose[0] * p;
        case MotionKind::TwoSegmentArm: {
            // two rigid segments along z: shoulder pivot at z = -0.5, elbow
            // at z = 0; membership is decided by the template coordinate
            const Vec3 shoulder(0, 0, -0.5);
            const Vec3 elbow(0, 0, 0);
            Vec3 q = p;
            if (p.z() > 0.0) q = elbow + rot_x(pose[1], p - elbow);
            return shoulder + rot_x(pose[0], q - shoulder);
        }
    }
    throw ConfigError("unknown motion kind");
}

GroundTruthSequence generate(const MotionSpec& spec) {
    if (spec.frames < 2) throw ConfigError("generate: frames must be at least 2");
    if (spec.points < 1) throw ConfigError("generate: points must be at least 1");
    if (!std::isfinite(spec.amplitude) || spec.amplitude <= 0.0) {
        throw ConfigError("generate: amplitude must be positive and finite");
    }
    if (!spec.pose_start.empty()) check_pose(spec.pose_start, spec.kind, "pose_start");
    if (!spec.pose_end.empty()) check_pose(spec.pose_end, spec.kind, "pose_end");

    Rng rng(spec.seed);
    const std::vector<Vec3> template_points = sample_template(spec.template_kind, spec.points, rng);

    std::vector<double> constants;
    if (spec.kind == MotionKind::RigidRotate) {
        Vec3 axis(rng.normal(), rng.normal(), rng.normal());
        if (axis.norm() < 1e-12) axis = Vec3(0, 0, 1);
        axis.normalize();
        constants = {axis.x(), axis.y(), axis.z()};
    }

    const int dim = pose_dim(spec.kind);
    auto draw_pose = [&]() {
        std::vector<double> pose(static_cast<std::size_t>(dim));
        for (double& v : pose) {
            if (spec.kind == MotionKind::Breathe) {
                v = rng.uniform(std::min(1.0, spec.amplitude), std::max(1.0, spec.amplitude));
            } else {
                v = rng.uniform(-spec.amplitude, spec.amplitude);
            }
        }
        return pose;
    };
    const std::vector<double> start = spec.pose_start.empty() ? draw_pose() : spec.pose_start;
    const std::vector<double> end = spec.pose_end.empty() ? draw_pose() : spec.pose_end;

    GroundTruthSequence seq;
    seq.spec = spec;
    seq.motion_constants = constants;
    seq.frames.reserve(static_cast<std::size_t>(spec.frames));
    seq.pose_params.reserve(static_cast<std::size_t>(spec.frames));
    for (int j = 0; j < spec.frames; ++j) {
        const double alpha = static_cast<double>(j) / static_cast<double>(spec.frames - 1);
        std::vector<double> pose(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d) {
            pose[static_cast<std::size_t>(d)] =
                (1.0 - alpha) * start[static_cast<std::size_t>(d)] +
                alpha * end[static_cast<std::size_t>(d)];
        }
        PointCloud frame;
        frame.frame_index = j;
        frame.points.reserve(template_points.size());
        for (const Vec3& p : template_points) {
            frame.points.push_back(deform_point(spec.kind, p, pose, constants));
        }
        seq.frames.push_back(std::move(frame));
        seq.pose_params.push_back(std::move(pose));
    }

    seq.normalization = fit_unit_cube(seq.frames);
    for (PointCloud& frame : seq.frames) frame = apply_transform(frame, seq.normalization);

    seq.source_index.resize(seq.frames.size());
    for (auto& idx : seq.source_index) {
        idx.resize(template_points.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    }
    return seq;
}

GroundTruthSequence corrupt(const GroundTruthSequence& seq, const CorruptionSpec& c) {
    if (!std::isfinite(c.noise_sigma) || c.noise_sigma < 0.0) {
        throw ConfigError("corrupt: noise_sigma must be non-negative and finite");
    }
    if (c.partial_count < 0) throw ConfigError("corrupt: partial_count must be non-negative");
    for (const PointCloud& f : seq.frames) {
        if (c.partial_count > static_cast<int>(f.points.size())) {
            throw ConfigError("corrupt: partial_count " + std::to_string(c.partial_count) +
                              " exceeds frame size " + std::to_string(f.points.size()));
        }
    }

    GroundTruthSequence out = seq;
    out.corruption = c;
    Rng rng(c.seed);
    for (std::size_t i = 0; i < out.frames.size(); ++i) {
        PointCloud& frame = out.frames[i];
        if (c.noise_sigma > 0.0) {
            for (Vec3& p : frame.points) {
                p.x() += c.noise_sigma * rng.normal();
                p.y() += c.noise_sigma * rng.normal();
                p.z() += c.noise_sigma * rng.normal();
            }
        }
        if (c.partial_count > 0) {
            const auto picked = rng.sample_without_replacement(frame.points.size(),
                                                               static_cast<std::size_t>(c.partial_count));
            PointCloud reduced;
            reduced.frame_index = frame.frame_index;
            std::vector<std::size_t> provenance;
            reduced.points.reserve(picked.size());
            provenance.reserve(picked.size());
            for (std::size_t k : picked) {
                reduced.points.push_back(frame.points[k]);
                provenance.push_back(out.source_index[i][k]);
            }
            frame = std::move(reduced);
            out.source_index[i] = std::move(provenance);
        }
    }
    return out;
}

GroundTruthSequence slice_window(const GroundTruthSequence& seq, std::size_t start,
                                 std::size_t length) {
    if (start + length > seq.frames.size()) throw ProtocolError("slice_window: out of range");
    GroundTruthSequence out;
    out.spec = seq.spec;
    out.spec.frames = static_cast<int>(length);
    out.corruption = seq.corruption;
    out.motion_constants = seq.motion_constants;
    out.normalization = seq.normalization;
    for (std::size_t j = 0; j < length; ++j) {
        out.frames.push_back(seq.frames[start + j]);
        out.source_index.push_back(seq.source_index[start + j]);
        out.pose_params.push_back(seq.pose_params[start + j]);
    }
    return out;
}

namespace {

std::string index_name(const char* stem, std::size_t one_based, const char* ext, int width = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%0*zu%s", stem, width, one_based, ext);
    return buf;
}

json manifest_json(const GroundTruthSequence& seq) {
    json m;
    m["kind"] = to_string(seq.spec.kind);
    m["template"] = to_string(seq.spec.template_kind);
    m["frames"] = static_cast<int>(seq.frames.size());
    m["points_per_frame"] = json::array();
    for (const auto& f : seq.frames) m["points_per_frame"].push_back(f.points.size());
    m["template_points"] = seq.spec.points;
    m["amplitude"] = seq.spec.amplitude;
    m["seed"] = seq.spec.seed;
    m["pose_params"] = seq.pose_params;
    m["motion_constants"] = seq.motion_constants;
    m["noise_sigma"] = seq.corruption.noise_sigma;
    m["partial_count"] = seq.corruption.partial_count;
    m["corruption_seed"] = seq.corruption.seed;
    m["normalization"] = {
        {"center", {seq.normalization.center.x(), seq.normalization.center.y(),
                    seq.normalization.center.z()}},
        {"scale", seq.normalization.scale}};
    return m;
}

void write_frames(const std::filesystem::path& dir, const GroundTruthSequence& seq) {
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        write_xyz(dir / index_name("frame", i + 1, ".xyz"), seq.frames[i]);
        write_corr(dir / index_name("gt", i + 1, ".corr"), seq.source_index[i]);
    }
}

}  // namespace

void write_sequence_dir(const std::filesystem::path& dir, const GroundTruthSequence& seq,
                        bool windows) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_frames(dir, seq);
    write_text_file(dir / "manifest.json", manifest_json(seq).dump(2) + "\n");

    if (windows && seq.frames.size() >= 4) {
        for (std::size_t start = 0; start + 4 <= seq.frames.size(); ++start) {
            const GroundTruthSequence win = slice_window(seq, start, 4);
            const std::filesystem::path wdir = dir / index_name("win", start + 1, "", 2);
            std::filesystem::create_directories(wdir, ec);
            if (ec) throw IoError("cannot create " + wdir.string() + ": " + ec.message());
            write_frames(wdir, win);
            json m = manifest_json(win);
            m["window_start_frame"] = start + 1;
            write_text_file(wdir / "manifest.json", m.dump(2) + "\n");
        }
    }
}

void make_dataset(const std::vector<MotionSpec>& specs, bool windows,
                  const std::filesystem::path& dir, const CorruptionSpec* corruption) {
    if (specs.empty()) throw ConfigError("make_dataset: no motion specs");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    for (std::size_t si = 0; si < specs.size(); ++si) {
        GroundTruthSequence seq = generate(specs[si]);
        if (corruption && (corruption->noise_sigma > 0.0 || corruption->partial_count > 0)) {
            CorruptionSpec per_seq = *corruption;
            per_seq.seed = mix_seed(corruption->seed, si);
            seq = corrupt(seq, per_seq);
        }
        write_sequence_dir(dir / index_name("seq", si + 1, ""), seq, windows);
    }
}

GroundTruthSequence load_sequence_dir(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw DatasetError(dir.string() + ": missing manifest.json");
    }
    json m;
    try {
        m = json::parse(read_text_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw DatasetError(manifest_path.string() + ": " + e.what());
    }

    GroundTruthSequence seq;
    try {
        seq.spec.kind = parse_motion_kind(m.at("kind").get<std::string>());
        seq.spec.template_kind = parse_template_kind(m.at("template").get<std::string>());
        seq.spec.points = m.at("template_points").get<int>();
        seq.spec.amplitude = m.at("amplitude").get<double>();
        seq.spec.seed = m.at("seed").get<std::uint64_t>();
        seq.pose_params = m.at("pose_params").get<std::vector<std::vector<double>>>();
        seq.motion_constants = m.at("motion_constants").get<std::vector<double>>();
        seq.corruption.noise_sigma = m.at("noise_sigma").get<double>();
        seq.corruption.partial_count = m.at("partial_count").get<int>();
        seq.corruption.seed = m.at("corruption_seed").get<std::uint64_t>();
        const auto& norm = m.at("normalization");
        const auto center = norm.at("center").get<std::vector<double>>();
        seq.normalization.center = Vec3(center.at(0), center.at(1), center.at(2));
        seq.normalization.scale = norm.at("scale").get<double>();
        const int frames = m.at("frames").get<int>();
        seq.spec.frames = frames;
        for (int i = 0; i < frames; ++i) {
            const auto frame_path = dir / index_name("frame", static_cast<std::size_t>(i) + 1, ".xyz");
            if (!std::filesystem::exists(frame_path)) {
                throw DatasetError(frame_path.string() + ": missing frame file");
            }
            PointCloud cloud = read_xyz(frame_path);
            cloud.frame_index = i;
            seq.frames.push_back(std::move(cloud));
            seq.source_index.push_back(
                read_corr(dir / index_name("gt", static_cast<std::size_t>(i) + 1, ".corr")));
            if (seq.source_index.back().size() != seq.frames.back().points.size()) {
                throw DatasetError(dir.string() + ": gt/frame size mismatch at frame " +
                                   std::to_string(i + 1));
            }
        }
    } catch (const json::exception& e) {
        throw DatasetError(manifest_path.string() + ": " + e.what());
    }
    return seq;
}

std::vector<PointCloud> load_frames_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) throw DatasetError(dir.string() + ": not a directory");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xyz" &&
            entry.path().filename().string().starts_with("frame_")) {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) throw DatasetError(dir.string() + ": no frame_*.xyz files");
    std::sort(files.begin(), files.end());
    std::vector<PointCloud> frames;
    frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        PointCloud cloud = read_xyz(files[i]);
        cloud.frame_index = static_cast<int>(i);
        frames.push_back(std::move(cloud));
    }
    return frames;
}

std::vector<std::filesystem::path> list_sequence_dirs(const std::filesystem::path& dataset_dir) {
    if (!std::filesystem::is_directory(dataset_dir)) {
        throw DatasetError(dataset_dir.string() + ": not a directory");
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(dataset_dir)) {
        if (entry.is_directory() &&
            entry.path().filename().string().starts_with("seq_")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace dtnt
