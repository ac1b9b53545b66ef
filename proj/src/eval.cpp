#include "dtnt/eval.hpp"

#include <algorithm>
#include <unordered_map>

#include "dtnt/error.hpp"

namespace dtnt {

namespace {

void check_maps(const CorrespondenceMap& pred, const CorrespondenceMap& gt,
                const PointCloud& target) {
    if (pred.match.size() != gt.match.size()) {
        throw ShapeError("correspondence maps cover different source points");
    }
    for (std::size_t idx : pred.match) {
        if (idx >= target.points.size()) throw ShapeError("pred map index out of range");
    }
    for (std::size_t idx : gt.match) {
        if (idx >= target.points.size()) throw ShapeError("gt map index out of range");
    }
}

}  // namespace

double correspondence_l2(const CorrespondenceMap& pred, const CorrespondenceMap& gt,
                         const PointCloud& target) {
    check_maps(pred, gt, target);
    if (pred.match.empty()) throw ShapeError("correspondence_l2: empty maps");
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.match.size(); ++k) {
        sum += (target.points[pred.match[k]] - target.points[gt.match[k]]).norm();
    }
    return sum / static_cast<double>(pred.match.size());
}

std::vector<std::pair<double, double>> matching_accuracy(const CorrespondenceMap& pred,
                                                         const CorrespondenceMap& gt,
                                                         const PointCloud& target,
                                                         const std::vector<double>& thresholds) {
    check_maps(pred, gt, target);
    if (pred.match.empty()) throw ShapeError("matching_accuracy: empty maps");
    if (thresholds.empty()) throw ConfigError("matching_accuracy: thresholds are empty");
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw ConfigError("matching_accuracy: thresholds must be ascending");
    }

    std::vector<double> errors;
    errors.reserve(pred.match.size());
    for (std::size_t k = 0; k < pred.match.size(); ++k) {
        errors.push_back((target.points[pred.match[k]] - target.points[gt.match[k]]).norm());
    }

    std::vector<std::pair<double, double>> curve;
    curve.reserve(thresholds.size());
    const double inv_n = 1.0 / static_cast<double>(errors.size());
    for (double tau : thresholds) {
        std::size_t within = 0;
        for (double e : errors) {
            if (e <= tau) ++within;
        }
        curve.emplace_back(tau, static_cast<double>(within) * inv_n);
    }
    return curve;
}

std::vector<double> default_thresholds() {
    std::vector<double> t(50);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = 0.25 * static_cast<double>(i) / static_cast<double>(t.size() - 1);
    }
    return t;
}

TrackingEvaluation evaluate_tracking(const TrackingResult& result,
                                     const GroundTruthSequence& gt_sequence,
                                     const std::vector<double>& thresholds) {
    const std::size_t pairs = result.transformed.size();
    if (pairs == 0 || result.maps.size() != pairs) {
        throw ProtocolError("evaluate_tracking: result has no pairs or inconsistent maps");
    }
    if (gt_sequence.frames.size() != pairs + 1) {
        throw ProtocolError("evaluate_tracking: result pairs do not align with ground-truth frames");
    }

    TrackingEvaluation eval;
    eval.per_pair.reserve(pairs);

    for (std::size_t i = 0; i < pairs; ++i) {
        const PointCloud& source = gt_sequence.frames[i];
        const PointCloud& target = gt_sequence.frames[i + 1];
        const CorrespondenceMap& pred = result.maps[i];
        if (pred.match.size() != source.points.size()) {
            throw ProtocolError("evaluate_tracking: map does not cover source frame " +
                                std::to_string(i));
        }
        if (result.transformed[i].points.size() != source.points.size()) {
            throw ProtocolError("evaluate_tracking: transformed cloud size mismatch at pair " +
                                std::to_string(i));
        }

        // ground truth match: the target point carrying the same template index
        std::unordered_map<std::size_t, std::size_t> target_by_origin;
        target_by_origin.reserve(target.points.size());
        for (std::size_t t = 0; t < target.points.size(); ++t) {
            target_by_origin.emplace(gt_sequence.source_index[i + 1][t], t);
        }

        CorrespondenceMap pred_subset, gt_subset;
        pred_subset.source_frame = gt_subset.source_frame = static_cast<int>(i);
        pred_subset.target_frame = gt_subset.target_frame = static_cast<int>(i) + 1;
        for (std::size_t k = 0; k < source.points.size(); ++k) {
            const auto it = target_by_origin.find(gt_sequence.source_index[i][k]);
            if (it == target_by_origin.end()) continue;  // dropped by partial sampling
            pred_subset.match.push_back(pred.match[k]);
            gt_subset.match.push_back(it->second);
        }
        if (pred_subset.match.empty()) {
            throw ProtocolError("evaluate_tracking: no ground-truth overlap at pair " +
                                std::to_string(i));
        }

        MetricReport report;
        report.chamfer = chamfer(result.transformed[i], target);
        report.correspondence_l2 = correspondence_l2(pred_subset, gt_subset, target);
        report.accuracy_curve = matching_accuracy(pred_subset, gt_subset, target, thresholds);
        report.evaluated_points = pred_subset.match.size();
        eval.per_pair.push_back(std::move(report));
    }

    MetricReport& agg = eval.aggregate;
    agg.accuracy_curve.resize(thresholds.size());
    for (std::size_t t = 0; t < thresholds.size(); ++t) agg.accuracy_curve[t] = {thresholds[t], 0.0};
    for (const MetricReport& r : eval.per_pair) {
        agg.chamfer += r.chamfer;
        agg.correspondence_l2 += r.correspondence_l2;
        agg.evaluated_points += r.evaluated_points;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            agg.accuracy_curve[t].second += r.accuracy_curve[t].second;
        }
    }
    const double inv_pairs = 1.0 / static_cast<double>(pairs);
    agg.chamfer *= inv_pairs;
    agg.correspondence_l2 *= inv_pairs;
    for (auto& [tau, frac] : agg.accuracy_curve) frac *= inv_pairs;
    return eval;
}

}  // namespace dtnt
