#pragma once

#include <vector>

#include "dtnt/geometry.hpp"
#include "dtnt/infer.hpp"
#include "dtnt/synmotion.hpp"

namespace dtnt {

struct MetricReport {
    double chamfer = 0.0;
    double correspondence_l2 = 0.0;
    std::vector<std::pair<double, double>> accuracy_curve;  // (threshold, fraction)
    std::size_t evaluated_points = 0;  // sources with a ground-truth counterpart
};

// Mean over source points of || target[pred[k]] - target[gt[k]] ||.
double correspondence_l2(const CorrespondenceMap& pred, const CorrespondenceMap& gt,
                         const PointCloud& target);

// Fraction of source points whose predicted match lies within each threshold
// of the ground-truth match. Thresholds must be ascending and nonempty.
std::vector<std::pair<double, double>> matching_accuracy(const CorrespondenceMap& pred,
                                                         const CorrespondenceMap& gt,
                                                         const PointCloud& target,
                                                         const std::vector<double>& thresholds);

// 50 uniform steps over [0, 0.25] in normalized units.
std::vector<double> default_thresholds();

struct TrackingEvaluation {
    std::vector<MetricReport> per_pair;
    MetricReport aggregate;  // arithmetic mean over pairs
};

// Per consecutive pair: Chamfer between the transformed cloud and the next
// frame, correspondence l2, and the accuracy curve. The ground-truth match
// of source point k is the target point carrying the same original template
// index; sources whose counterpart was dropped by partial sampling are
// excluded from the correspondence metrics.
TrackingEvaluation evaluate_tracking(const TrackingResult& result,
                                     const GroundTruthSequence& gt_sequence,
                                     const std::vector<double>& thresholds);

}  // namespace dtnt
