#pragma once

#include <Eigen/Core>
#include <vector>

#include "dtnt/diffnet.hpp"
#include "dtnt/geometry.hpp"

namespace dtnt {

// The flow decoder: maps [point ; descriptor] to a per-point displacement.
struct FlowDecoder {
    MlpNetwork net;
    int dim = 0;  // descriptor dimension

    FlowDecoder() = default;
    FlowDecoder(MlpNetwork network, int descriptor_dim);
};

// Per-point displacements aligned index-for-index with a source cloud.
struct FlowField {
    std::vector<Vec3> displacements;
};

struct FlowCache {
    std::vector<ForwardCache> per_point;
};

// displacement[k] = net([cloud.points[k] ; z]); the same z is broadcast to
// every point of the frame.
FlowField predict_flow(const FlowDecoder& decoder, const PointCloud& cloud,
                       const Eigen::VectorXd& z, FlowCache& cache);
FlowField predict_flow(const FlowDecoder& decoder, const PointCloud& cloud,
                       const Eigen::VectorXd& z);

// Output point k = cloud point k + displacement k; point order is preserved,
// so the identity correspondence with the source frame is maintained.
PointCloud apply_flow(const PointCloud& cloud, const FlowField& field);

struct FlowBackwardResult {
    GradientBuffer param_grads;
    Eigen::VectorXd d_z;          // summed over points, in point-index order
    std::vector<Vec3> d_points;
};

FlowBackwardResult flow_backward(const FlowDecoder& decoder, const PointCloud& cloud,
                                 const Eigen::VectorXd& z, const FlowCache& cache,
                                 const std::vector<Vec3>& d_displacements);

}  // namespace dtnt
