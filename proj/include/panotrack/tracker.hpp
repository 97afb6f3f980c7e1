// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panotrack/association.hpp"
#include "panotrack/error.hpp"
#include "panotrack/filtering.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/pose.hpp"

namespace panotrack {

struct TrackerConfig {
    /// A matched pair is accepted only if its combined cost is below this.
    double epsilon = 1.0;
    int max_lifespan = 10;
    KalmanParams kalman;
    double merge_radius_m = kDefaultMergeRadiusM;
    PoseHeuristics pose;
    /// Overrides the rig's stature prior when set.
    std::optional<double> body_height_m;
    CostMode cost_mode = CostMode::kTrajectoryAndAppearance;
    /// Weight of the previous track embedding when blending in a new match.
    /// 0 keeps only the latest matched embedding.
    double embedding_ema = 0.0;

    void validate() const {
        if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "epsilon must be >= 0");
        if (max_lifespan < 1) throw Error(ErrorCode::kInvalidConfig, "max_lifespan must be >= 1");
        if (!(kalman.measurement_noise_std > 0.0) || !(kalman.process_accel_std > 0.0) ||
            !(kalman.initial_velocity_std > 0.0)) {
            throw Error(ErrorCode::kInvalidConfig, "kalman noise parameters must be positive");
        }
        if (!(merge_radius_m >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "merge_radius must be >= 0");
        if (body_height_m && !(*body_height_m > 0.0)) {
            throw Error(ErrorCode::kInvalidConfig, "body height must be positive");
        }
        if (!(embedding_ema >= 0.0 && embedding_ema < 1.0)) {
            throw Error(ErrorCode::kInvalidConfig, "embedding_ema must be in [0, 1)");
        }
    }
};

/// One person observed in one view at one frame. The derived fields are
/// filled by localize_detection().
struct Detection {
    int frame_id = 0;
    int view_id = 0;
    std::vector<Keypoint> keypoints;
    Embedding embedding;

    double u_ref = 0.0;
    double h_body = 0.0;
    Location3D location;
};

/// Fills u_ref, h_body and location. Throws on unusable poses.
inline void localize_detection(const PanoramaRig& rig, Detection& det, const PoseHeuristics& pose = {}) {
    det.h_body = estimate_pixel_height(det.keypoints, pose);
    det.u_ref = reference_column(det.keypoints, pose.visibility_threshold);
    det.location = localize(rig, det.view_id, det.u_ref, det.h_body);
}

struct Track {
    int track_id = 0;
    int lifespan = 0;
    KalmanState kalman;
    Embedding embedding;
    std::vector<std::pair<int, Location3D>> history;
    /// Kalman prediction for the frame being processed.
    Location3D predicted;
};

struct TrackletRecord {
    int frame = 0;
    int id = 0;
    Location3D location;
    /// True when the track coasted this frame and `location` is a prediction.
    bool estimated = false;
    std::optional<int> view;
    std::optional<double> u;

    bool operator==(const TrackletRecord&) const = default;
};

struct TrackerStats {
    int frames = 0;
    int tracks_created = 0;
    int tracks_retired = 0;
};

/// Per-frame track management. Each frame: predict every live track, build
/// the combined cost against the frame's detections, solve the assignment,
/// age every track by one, refresh tracks whose match beats epsilon, spawn a
/// track per leftover detection, and drop tracks whose lifespan hit zero.
///
/// Not thread-safe; one instance per stream.
class Tracker {
public:
    explicit Tracker(TrackerConfig config, double rig_body_height_m = kDefaultBodyHeightM)
        : config_(std::move(config)),
          body_height_m_(config_.body_height_m.value_or(rig_body_height_m)) {
        config_.validate();
    }

    const TrackerConfig& config() const { return config_; }
    const std::vector<Track>& tracks() const { return tracks_; }
    const TrackerStats& stats() const { return stats_; }
    double body_height_m() const { return body_height_m_; }

    /// Cost matrix of the most recent step (rows follow the pre-step track order).
    const CostMatrix& last_cost() const { return last_cost_; }

    std::vector<TrackletRecord> step(std::span<const Detection> detections, int frame) {
        if (last_frame_ && frame <= *last_frame_) {
            throw Error(ErrorCode::kNonMonotoneFrame, "frame " + std::to_string(frame) +
                                                          " after " + std::to_string(*last_frame_));
        }
        std::vector<char> detection_matched(detections.size(), 0);
        std::vector<char> track_observed(tracks_.size(), 0);
        std::vector<int> track_detection(tracks_.size(), -1);

        if (!tracks_.empty()) {
            for (Track& t : tracks_) {
                auto [state, where] = kf_predict(t.kalman, config_.kalman);
                t.kalman = std::move(state);
                t.predicted = where;
            }
            last_cost_ = build_cost_matrix<Track, Detection>(tracks_, detections, body_height_m_,
                                                             config_.cost_mode);
            const Assignment assignment = solve_assignment(last_cost_);

            for (Track& t : tracks_) --t.lifespan;
            for (const auto& [row, col] : assignment.matches) {
                if (!(last_cost_(row, col) < config_.epsilon)) continue;
                Track& t = tracks_[row];
                const Detection& det = detections[col];
                t.history.emplace_back(frame, det.location);
                t.lifespan = config_.max_lifespan;
                t.kalman = kf_update(t.kalman, det.location, config_.kalman);
                blend_embedding(t.embedding, det.embedding);
                detection_matched[col] = 1;
                track_observed[row] = 1;
                track_detection[row] = static_cast<int>(col);
            }
        } else {
            last_cost_ = CostMatrix(0, detections.size());
        }

        for (std::size_t j = 0; j < detections.size(); ++j) {
            if (detection_matched[j]) continue;
            spawn(detections[j], frame);
            track_observed.push_back(1);
            track_detection.push_back(static_cast<int>(j));
        }

        std::vector<TrackletRecord> out;
        std::vector<Track> survivors;
        survivors.reserve(tracks_.size());
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            Track& t = tracks_[i];
            if (t.lifespan <= 0) {
                ++stats_.tracks_retired;
                continue;
            }
            TrackletRecord rec;
            rec.frame = frame;
            rec.id = t.track_id;
            if (track_observed[i]) {
                const Detection& det = detections[track_detection[i]];
                rec.location = det.location;
                rec.view = det.view_id;
                rec.u = det.u_ref;
            } else {
                rec.location = t.predicted;
                rec.estimated = true;
            }
            out.push_back(rec);
            survivors.push_back(std::move(t));
        }
        tracks_ = std::move(survivors);
        last_frame_ = frame;
        ++stats_.frames;
        return out;
    }

private:
    void spawn(const Detection& det, int frame) {
        Track t;
        t.track_id = next_id_++;
        t.lifespan = config_.max_lifespan;
        t.kalman = kf_new(det.location, config_.kalman);
        t.embedding = det.embedding;
        t.history.emplace_back(frame, det.location);
        t.predicted = det.location;
        tracks_.push_back(std::move(t));
        ++stats_.tracks_created;
    }

    void blend_embedding(Embedding& track_embedding, const Embedding& observed) const {
        const double beta = config_.embedding_ema;
        if (beta == 0.0 || track_embedding.size() != observed.size()) {
            track_embedding = observed;
            return;
        }
        for (std::size_t k = 0; k < observed.size(); ++k) {
            track_embedding[k] = static_cast<float>(beta * track_embedding[k] + (1.0 - beta) * observed[k]);
        }
    }

    TrackerConfig config_;
    double body_height_m_;
    std::vector<Track> tracks_;
    CostMatrix last_cost_;
    std::optional<int> last_frame_;
    int next_id_ = 1;
    TrackerStats stats_;
};

/// Detections of one frame, already localized.
struct Frame {
    int frame_id = 0;
    std::vector<Detection> detections;
};

/// Groups raw detections by frame (ascending) and localizes each. Detections
/// whose pose cannot be localized are dropped and reported through
/// `on_skip` (index into `raw`, error). Cross-view duplicates are merged per
/// frame when config.merge_radius_m > 0.
inline std::vector<Frame> prepare_frames(
    const PanoramaRig& rig, std::vector<Detection> raw, const TrackerConfig& config,
    const std::function<void(std::size_t, const Error&)>& on_skip = {}) {
    const PanoramaRig prior_rig =
        config.body_height_m ? rig.with_body_height(*config.body_height_m) : rig;
    std::map<int, std::vector<Detection>> by_frame;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        try {
            localize_detection(prior_rig, raw[i], config.pose);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kUnknownView) throw;
            if (on_skip) on_skip(i, e);
            continue;
        }
        by_frame[raw[i].frame_id].push_back(std::move(raw[i]));
    }
    std::vector<Frame> frames;
    frames.reserve(by_frame.size());
    for (auto& [frame_id, dets] : by_frame) {
        frames.push_back(Frame{frame_id, merge_cross_view_duplicates(prior_rig, std::move(dets),
                                                                     config.merge_radius_m)});
    }
    return frames;
}

/// Runs the tracker over frames sorted ascending. Output is ordered by
/// (frame, track id).
inline std::vector<TrackletRecord> run(const TrackerConfig& config, std::span<const Frame> frames,
                                       double rig_body_height_m = kDefaultBodyHeightM,
                                       TrackerStats* stats = nullptr) {
    Tracker tracker(config, rig_body_height_m);
    std::vector<TrackletRecord> out;
    for (const Frame& f : frames) {
        auto records = tracker.step(f.detections, f.frame_id);
        out.insert(out.end(), records.begin(), records.end());
    }
    if (stats != nullptr) *stats = tracker.stats();
    return out;
}

}  // namespace panotrack
