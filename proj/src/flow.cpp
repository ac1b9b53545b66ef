#include "dtnt/flow.hpp"

#include "dtnt/error.hpp"

namespace dtnt {

FlowDecoder::FlowDecoder(MlpNetwork network, int descriptor_dim)
    : net(std::move(network)), dim(descriptor_dim) {
    if (dim < 1) throw ConfigMismatchError("FlowDecoder: descriptor dimension must be positive");
    if (net.input_size() != 3 + dim) {
        throw ConfigMismatchError("FlowDecoder: net expects input width " +
                                  std::to_string(net.input_size()) + " but 3 + dim = " +
                                  std::to_string(3 + dim));
    }
    if (net.output_size() != 3) {
        throw ConfigMismatchError("FlowDecoder: net output width must be 3");
    }
}

FlowField predict_flow(const FlowDecoder& decoder, const PointCloud& cloud,
                       const Eigen::VectorXd& z, FlowCache& cache) {
    if (z.size() != decoder.dim) {
        throw ShapeError("predict_flow: descriptor dimension " + std::to_string(z.size()) +
                         " does not match decoder dim " + std::to_string(decoder.dim));
    }
    validate_cloud(cloud);

    FlowField field;
    field.displacements.resize(cloud.points.size());
    cache.per_point.resize(cloud.points.size());

    Eigen::VectorXd input(3 + decoder.dim);
    input.tail(decoder.dim) = z;
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
        input.head<3>() = cloud.points[k];
        const Eigen::VectorXd out = forward(decoder.net, input, cache.per_point[k]);
        field.displacements[k] = out.head<3>();
    }
    return field;
}

FlowField predict_flow(const FlowDecoder& decoder, const PointCloud& cloud,
                       const Eigen::VectorXd& z) {
    FlowCache cache;
    return predict_flow(decoder, cloud, z, cache);
}

PointCloud apply_flow(const PointCloud& cloud, const FlowField& field) {
    if (field.displacements.size() != cloud.points.size()) {
        throw ShapeError("apply_flow: field length does not match cloud size");
    }
    PointCloud out;
    out.frame_index = cloud.frame_index;
    out.points.resize(cloud.points.size());
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
        out.points[k] = cloud.points[k] + field.displacements[k];
    }
    return out;
}

FlowBackwardResult flow_backward(const FlowDecoder& decoder, const PointCloud& cloud,
                                 const Eigen::VectorXd& z, const FlowCache& cache,
                                 const std::vector<Vec3>& d_displacements) {
    if (z.size() != decoder.dim) throw ShapeError("flow_backward: descriptor dimension mismatch");
    if (cache.per_point.size() != cloud.points.size()) {
        throw CacheError("flow_backward: cache does not match cloud size");
    }
    if (d_displacements.size() != cloud.points.size()) {
        throw ShapeError("flow_backward: d_displacements length mismatch");
    }

    FlowBackwardResult result;
    result.param_grads = zero_gradients(decoder.net);
    result.d_z = Eigen::VectorXd::Zero(decoder.dim);
    result.d_points.resize(cloud.points.size());

    Eigen::VectorXd d_out(3);
    Eigen::VectorXd d_input;
    for (std::size_t k = 0; k < cloud.points.size(); ++k) {
        d_out = d_displacements[k];
        backward_accumulate(decoder.net, cache.per_point[k], d_out, result.param_grads, d_input);
        result.d_points[k] = d_input.head<3>();
        result.d_z += d_input.tail(decoder.dim);
    }
    return result;
}

}  // namespace dtnt
