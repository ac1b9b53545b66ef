#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace dtnt {

using Vec3 = Eigen::Vector3d;

// One frame of a sequence: an ordered list of 3D points. Index k refers to
// the same physical point for the lifetime of the frame.
struct PointCloud {
    std::vector<Vec3> points;
    int frame_index = 0;

    std::size_t size() const { return points.size(); }
};

// Throws EmptyCloudError / InvalidCoordinateError on violation.
void validate_cloud(const PointCloud& cloud);

bool is_finite(const Vec3& p);

// Exact nearest-neighbor index over one cloud (axis-aligned binary space
// partition). Immutable after construction; safe for concurrent queries.
// Ties break to the smallest point index.
class NeighborIndex {
public:
    explicit NeighborIndex(const PointCloud& cloud);

    // (point index, Euclidean distance) of the exact nearest stored point.
    std::pair<std::size_t, double> nearest(const Vec3& query) const;

    const PointCloud& cloud() const { return *cloud_; }

private:
    struct Node {
        // leaf: [begin, end) into order_; internal: split axis/value + kids
        std::uint32_t begin = 0, end = 0;
        std::int32_t axis = -1;
        double split = 0.0;
        std::int32_t left = -1, right = -1;
        bool leaf() const { return axis < 0; }
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Vec3& query,
                double& best_d2, std::size_t& best_idx) const;

    const PointCloud* cloud_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

// Dense correspondence: match[k] is the target index matched to source point k.
struct CorrespondenceMap {
    int source_frame = 0;
    int target_frame = 0;
    std::vector<std::size_t> match;
};

NeighborIndex build_index(const PointCloud& cloud);

// Eq. 5: (1/|a|) sum_x min_y ||x-y|| + (1/|b|) sum_y min_x ||y-x||,
// un-squared norms, contributions summed in point-index order.
double chamfer(const PointCloud& a, const PointCloud& b);
double chamfer(const PointCloud& a, const PointCloud& b, const NeighborIndex& index_b);

// Gradient of chamfer(a, b) w.r.t. a's coordinates, nearest-neighbor
// assignments held fixed; zero subgradient at coincident pairs.
std::vector<Vec3> chamfer_gradient(const PointCloud& a, const PointCloud& b);

// Value and gradient in one pass (shares the NN queries).
std::pair<double, std::vector<Vec3>> chamfer_with_gradient(const PointCloud& a, const PointCloud& b);
std::pair<double, std::vector<Vec3>> chamfer_with_gradient(const PointCloud& a, const PointCloud& b,
                                                           const NeighborIndex& index_b);

// match[k] = index of the target point nearest to transformed point k.
CorrespondenceMap extract_correspondence(const PointCloud& transformed, const PointCloud& target);

// Per-sequence normalization: p_norm = (p - center) / scale.
struct NormTransform {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return (p - center) / scale; }
    Vec3 invert(const Vec3& p) const { return p * scale + center; }
};

// Fit the union of all frames into the unit cube centered at the origin.
NormTransform fit_unit_cube(const std::vector<PointCloud>& frames);

PointCloud apply_transform(const PointCloud& cloud, const NormTransform& t);
PointCloud invert_transform(const PointCloud& cloud, const NormTransform& t);

}  // namespace dtnt
