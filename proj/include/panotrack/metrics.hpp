// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "panotrack/association.hpp"
#include "panotrack/error.hpp"
#include "panotrack/geometry.hpp"

namespace panotrack {

struct GroundTruthRecord {
    int frame = 0;
    int id = 0;
    Location3D location;

    bool operator==(const GroundTruthRecord&) const = default;
};

/// Minimal view of a prediction for scoring; TrackletRecord converts to it.
struct PredictionRecord {
    int frame = 0;
    int id = 0;
    Location3D location;
};

template <typename T>
concept Located = requires(const T& t) {
    { t.location } -> std::convertible_to<Location3D>;
};

struct FrameCorrespondence {
    /// (gt index, prediction index)
    std::vector<std::pair<std::size_t, std::size_t>> matches;
    std::vector<std::size_t> unmatched_gt;
    std::vector<std::size_t> unmatched_pred;
    double total_distance = 0.0;
};

/// Minimum-total-distance matching between one frame's ground truth and
/// predictions. Pairs farther apart than `dist_threshold_m` never match.
/// Gated pairs get a cost above any sum of admissible distances, so the
/// solver first maximises the number of admissible pairs and then
/// minimises their total distance.
template <Located G, Located P>
FrameCorrespondence match_frame(std::span<const G> gt, std::span<const P> pred, double dist_threshold_m) {
    FrameCorrespondence out;
    const double forbidden =
        1.0 + dist_threshold_m * static_cast<double>(std::min(gt.size(), pred.size()) + 1);
    CostMatrix cost(gt.size(), pred.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double d = distance(gt[i].location, pred[j].location);
            cost(i, j) = d <= dist_threshold_m ? d : forbidden;
        }
    }
    const Assignment assignment = solve_assignment(cost);
    std::vector<char> gt_matched(gt.size(), 0);
    std::vector<char> pred_matched(pred.size(), 0);
    for (const auto& [i, j] : assignment.matches) {
        const double d = distance(gt[i].location, pred[j].location);
        if (d > dist_threshold_m) continue;
        out.matches.emplace_back(i, j);
        out.total_distance += d;
        gt_matched[i] = 1;
        pred_matched[j] = 1;
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!gt_matched[i]) out.unmatched_gt.push_back(i);
    }
    for (std::size_t j = 0; j < pred.size(); ++j) {
        if (!pred_matched[j]) out.unmatched_pred.push_back(j);
    }
    return out;
}

struct EvalOptions {
    double dist_threshold_m = 1.0;
    std::vector<double> loc_thresholds_m = {0.5, 1.0, 2.0};
    /// Records farther than this from the rig are dropped from both sides.
    double eval_radius_m = std::numeric_limits<double>::infinity();
    double mostly_tracked_ratio = 0.8;
    double mostly_lost_ratio = 0.2;
};

struct EvalReport {
    double mota = 0.0;
    double mt_fraction = 0.0;
    double ml_fraction = 0.0;
    long fp = 0;
    long fn = 0;
    long idsw = 0;
    long total_gt = 0;
    long matches = 0;
    int gt_identities = 0;
    int frames = 0;
    /// (threshold, fraction of ground-truth points with a prediction closer than it)
    std::vector<std::pair<double, double>> loc_precision;

    bool operator==(const EvalReport&) const = default;
};

/// CLEAR-MOT counts over a whole sequence plus thresholded localization
/// precision. An identity switch is charged when a ground-truth identity is
/// matched to a prediction id different from the one it was last matched to.
template <Located G, Located P>
EvalReport evaluate(std::span<const G> gt, std::span<const P> pred, const EvalOptions& options = {}) {
    const auto inside = [&](const Location3D& loc) {
        return std::hypot(loc.x_m, loc.z_m) <= options.eval_radius_m;
    };

    std::map<int, std::vector<GroundTruthRecord>> gt_by_frame;
    std::map<int, std::vector<PredictionRecord>> pred_by_frame;
    for (const G& g : gt) {
        if (inside(g.location)) gt_by_frame[g.frame].push_back(GroundTruthRecord{g.frame, g.id, g.location});
    }
    for (const P& p : pred) {
        if (inside(p.location)) pred_by_frame[p.frame].push_back(PredictionRecord{p.frame, p.id, p.location});
    }

    std::set<int> frames;
    for (const auto& [f, _] : gt_by_frame) frames.insert(f);
    for (const auto& [f, _] : pred_by_frame) frames.insert(f);

    EvalReport report;
    std::vector<long> within(options.loc_thresholds_m.size(), 0);
    std::map<int, int> last_pred_for_gt;
    std::map<int, std::pair<int, int>> coverage;  // gt id -> (frames present, frames matched)

    static const std::vector<GroundTruthRecord> kNoGt;
    static const std::vector<PredictionRecord> kNoPred;
    for (int f : frames) {
        auto gt_it = gt_by_frame.find(f);
        auto pred_it = pred_by_frame.find(f);
        const auto& frame_gt = gt_it == gt_by_frame.end() ? kNoGt : gt_it->second;
        const auto& frame_pred = pred_it == pred_by_frame.end() ? kNoPred : pred_it->second;

        const FrameCorrespondence corr = match_frame<GroundTruthRecord, PredictionRecord>(
            frame_gt, frame_pred, options.dist_threshold_m);

        report.total_gt += static_cast<long>(frame_gt.size());
        report.fn += static_cast<long>(corr.unmatched_gt.size());
        report.fp += static_cast<long>(corr.unmatched_pred.size());
        report.matches += static_cast<long>(corr.matches.size());

        for (const GroundTruthRecord& g : frame_gt) ++coverage[g.id].first;
        for (const auto& [gi, pj] : corr.matches) {
            const int gt_id = frame_gt[gi].id;
            const int pred_id = frame_pred[pj].id;
            ++coverage[gt_id].second;
            auto last = last_pred_for_gt.find(gt_id);
            if (last != last_pred_for_gt.end() && last->second != pred_id) ++report.idsw;
            last_pred_for_gt[gt_id] = pred_id;
        }

        for (const GroundTruthRecord& g : frame_gt) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const PredictionRecord& p : frame_pred) nearest = std::min(nearest, distance(g.location, p.location));
            for (std::size_t t = 0; t < options.loc_thresholds_m.size(); ++t) {
                if (nearest < options.loc_thresholds_m[t]) ++within[t];
            }
        }
    }

    if (report.total_gt == 0) {
        throw Error(ErrorCode::kEmptyGroundTruth, "no ground-truth records inside the evaluation radius");
    }

    report.frames = static_cast<int>(frames.size());
    report.mota = 1.0 - static_cast<double>(report.fp + report.fn + report.idsw) /
                            static_cast<double>(report.total_gt);

    int mostly_tracked = 0;
    int mostly_lost = 0;
    for (const auto& [id, counts] : coverage) {
        const double ratio = static_cast<double>(counts.second) / static_cast<double>(counts.first);
        if (ratio >= options.mostly_tracked_ratio) ++mostly_tracked;
        if (ratio <= options.mostly_lost_ratio) ++mostly_lost;
    }
    report.gt_identities = static_cast<int>(coverage.size());
    report.mt_fraction = static_cast<double>(mostly_tracked) / report.gt_identities;
    report.ml_fraction = static_cast<double>(mostly_lost) / report.gt_identities;

    for (std::size_t t = 0; t < options.loc_thresholds_m.size(); ++t) {
        report.loc_precision.emplace_back(options.loc_thresholds_m[t],
                                          static_cast<double>(within[t]) / static_cast<double>(report.total_gt));
    }
    return report;
}

}  // namespace panotrack
