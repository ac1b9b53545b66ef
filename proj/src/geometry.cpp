#include "dtnt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtnt/error.hpp"

namespace dtnt {

namespace {

constexpr std::uint32_t kLeafSize = 16;

inline double dist2(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace

bool is_finite(const Vec3& p) {
    return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

void validate_cloud(const PointCloud& cloud) {
    if (cloud.points.empty()) throw EmptyCloudError("point cloud is empty");
    for (const Vec3& p : cloud.points) {
        if (!is_finite(p)) throw InvalidCoordinateError("point cloud contains a non-finite coordinate");
    }
}

NeighborIndex::NeighborIndex(const PointCloud& cloud) : cloud_(&cloud) {
    validate_cloud(cloud);
    order_.resize(cloud.points.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * order_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t NeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    // split the widest axis at the median
    Vec3 lo = cloud_->points[order_[begin]];
    Vec3 hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(cloud_->points[order_[i]]);
        hi = hi.cwiseMax(cloud_->points[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = cloud_->points[a][axis];
                         const double cb = cloud_->points[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    nodes_[id].axis = axis;
    nodes_[id].split = cloud_->points[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void NeighborIndex::search(std::int32_t node, const Vec3& query,
                           double& best_d2, std::size_t& best_idx) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.leaf()) {
        for (std::uint32_t i = n.begin; i < n.end; ++i) {
            const std::size_t idx = order_[i];
            const double d2 = dist2(query, cloud_->points[idx]);
            if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
                best_d2 = d2;
                best_idx = idx;
            }
        }
        return;
    }
    const double delta = query[n.axis] - n.split;
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search(near, query, best_d2, best_idx);
    // the far half-space is at least delta^2 away; equality must still be
    // visited so that equidistant lower indices win
    if (delta * delta <= best_d2) search(far, query, best_d2, best_idx);
}

std::pair<std::size_t, double> NeighborIndex::nearest(const Vec3& query) const {
    if (!is_finite(query)) throw InvalidCoordinateError("nearest: query has a non-finite coordinate");
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_idx = cloud_->points.size();
    search(root_, query, best_d2, best_idx);
    return {best_idx, std::sqrt(best_d2)};
}

NeighborIndex build_index(const PointCloud& cloud) { return NeighborIndex(cloud); }

double chamfer(const PointCloud& a, const PointCloud& b) {
    const NeighborIndex index_b(b);
    return chamfer(a, b, index_b);
}

double chamfer(const PointCloud& a, const PointCloud& b, const NeighborIndex& index_b) {
    validate_cloud(a);
    validate_cloud(b);
    const NeighborIndex index_a(a);

    double forward = 0.0;
    for (std::size_t k = 0; k < a.points.size(); ++k) forward += index_b.nearest(a.points[k]).second;
    double backward = 0.0;
    for (std::size_t k = 0; k < b.points.size(); ++k) backward += index_a.nearest(b.points[k]).second;

    return forward / static_cast<double>(a.points.size()) +
           backward / static_cast<double>(b.points.size());
}

std::pair<double, std::vector<Vec3>> chamfer_with_gradient(const PointCloud& a, const PointCloud& b) {
    const NeighborIndex index_b(b);
    return chamfer_with_gradient(a, b, index_b);
}

std::pair<double, std::vector<Vec3>> chamfer_with_gradient(const PointCloud& a, const PointCloud& b,
                                                           const NeighborIndex& index_b) {
    validate_cloud(a);
    validate_cloud(b);
    const NeighborIndex index_a(a);
    const double inv_na = 1.0 / static_cast<double>(a.points.size());
    const double inv_nb = 1.0 / static_cast<double>(b.points.size());

    std::vector<Vec3> grad(a.points.size(), Vec3::Zero());

    double forward = 0.0;
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        const auto [j, d] = index_b.nearest(a.points[k]);
        forward += d;
        if (d > 0.0) grad[k] += (a.points[k] - b.points[j]) * (inv_na / d);
    }
    double backward = 0.0;
    for (std::size_t k = 0; k < b.points.size(); ++k) {
        const auto [j, d] = index_a.nearest(b.points[k]);
        backward += d;
        if (d > 0.0) grad[j] += (a.points[j] - b.points[k]) * (inv_nb / d);
    }

    const double value = forward * inv_na + backward * inv_nb;
    return {value, std::move(grad)};
}

std::vector<Vec3> chamfer_gradient(const PointCloud& a, const PointCloud& b) {
    return chamfer_with_gradient(a, b).second;
}

CorrespondenceMap extract_correspondence(const PointCloud& transformed, const PointCloud& target) {
    validate_cloud(transformed);
    const NeighborIndex index(target);
    CorrespondenceMap map;
    map.source_frame = transformed.frame_index;
    map.target_frame = target.frame_index;
    map.match.resize(transformed.points.size());
    for (std::size_t k = 0; k < transformed.points.size(); ++k) {
        map.match[k] = index.nearest(transformed.points[k]).first;
    }
    return map;
}

NormTransform fit_unit_cube(const std::vector<PointCloud>& frames) {
    if (frames.empty()) throw EmptyCloudError("fit_unit_cube: no frames");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const PointCloud& f : frames) {
        validate_cloud(f);
        for (const Vec3& p : f.points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }
    NormTransform t;
    t.center = (lo + hi) / 2.0;
    t.scale = (hi - lo).maxCoeff();
    if (t.scale <= 0.0) t.scale = 1.0;  // degenerate: all points coincide
    return t;
}

PointCloud apply_transform(const PointCloud& cloud, const NormTransform& t) {
    PointCloud out;
    out.frame_index = cloud.frame_index;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) out.points.push_back(t.apply(p));
    return out;
}

PointCloud invert_transform(const PointCloud& cloud, const NormTransform& t) {
    PointCloud out;
    out.frame_index = cloud.frame_index;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) out.points.push_back(t.invert(p));
    return out;
}

}  // namespace dtnt
