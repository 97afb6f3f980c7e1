// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "panotrack/association.hpp"
#include "panotrack/error.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/metrics.hpp"
#include "panotrack/pose.hpp"
#include "panotrack/tracker.hpp"

namespace panotrack {

struct OcclusionEpisode {
    int agent = 0;
    int start_frame = 0;
    int length = 0;

    bool covers(int agent_index, int frame) const {
        return agent_index == agent && frame >= start_frame && frame < start_frame + length;
    }
};

/// Heights of the rendered joints as fractions of stature above the ground.
struct SkeletonProportions {
    double nose = 1.0;
    double shoulder = 0.82;
    double hip = 0.52;
    double ankle = 0.0;
    /// Half-widths in metres, applied along the camera X axis.
    double shoulder_half_width_m = 0.2;
    double hip_half_width_m = 0.1;
    double ankle_half_width_m = 0.1;
};

struct SceneConfig {
    int n_agents = 10;
    int n_frames = 300;
    double arena_radius_m = 8.0;
    /// Agents are kept at least this far from the rig.
    double min_radius_m = 1.0;
    double speed_min_m = 0.02;  // per frame
    double speed_max_m = 0.08;
    double max_turn_deg = 10.0;  // per frame
    double agent_height_m = kDefaultBodyHeightM;
    double camera_height_m = 1.5;
    int embedding_dim = static_cast<int>(kDefaultEmbeddingDim);
    double embedding_noise_std = 0.0;
    double keypoint_noise_px = 0.0;
    double keypoint_confidence = 0.9;
    double detection_dropout_prob = 0.0;
    /// Extra angular reach of each view beyond its own yaw sector; > 0 emits
    /// the same person in two adjacent views near the seams.
    double overlap_deg = 0.0;
    std::vector<OcclusionEpisode> occlusions;
    SkeletonProportions skeleton;
    std::uint64_t seed = 0;

    void validate() const {
        const auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
        if (n_agents < 1) fail("n_agents must be >= 1");
        if (n_frames < 1) fail("n_frames must be >= 1");
        if (!(arena_radius_m > 0.0)) fail("arena_radius_m must be positive");
        if (!(min_radius_m >= 0.0 && min_radius_m < 0.5 * arena_radius_m)) {
            fail("min_radius_m must be in [0, arena_radius_m / 2)");
        }
        if (!(speed_min_m >= 0.0 && speed_max_m >= speed_min_m)) fail("need 0 <= speed_min <= speed_max");
        if (!(max_turn_deg >= 0.0)) fail("max_turn_deg must be >= 0");
        if (!(agent_height_m > 0.0)) fail("agent_height_m must be positive");
        if (embedding_dim < 1) fail("embedding_dim must be >= 1");
        if (!(embedding_noise_std >= 0.0)) fail("embedding_noise_std must be >= 0");
        if (!(keypoint_noise_px >= 0.0)) fail("keypoint_noise_px must be >= 0");
        if (!(keypoint_confidence >= 0.0 && keypoint_confidence <= 1.0)) fail("keypoint_confidence must be in [0, 1]");
        if (!(detection_dropout_prob >= 0.0 && detection_dropout_prob <= 1.0)) {
            fail("detection_dropout_prob must be in [0, 1]");
        }
        if (!(overlap_deg >= 0.0)) fail("overlap_deg must be >= 0");
        for (const OcclusionEpisode& o : occlusions) {
            if (o.agent < 0 || o.agent >= n_agents || o.length < 0) fail("bad occlusion episode");
        }
    }
};

/// Fixed unit-norm appearance of one identity.
inline Embedding base_embedding(std::uint64_t identity_seed, int dim) {
    std::mt19937_64 rng(identity_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (double& x : v) {
        x = normal(rng);
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    Embedding e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = static_cast<float>(v[i] * inv);
    return e;
}

/// Adds isotropic Gaussian noise of total expected norm `noise_std` to a unit
/// base vector and renormalises.
template <typename Rng>
Embedding perturb_embedding(const Embedding& base, double noise_std, Rng& rng) {
    if (noise_std == 0.0) return base;
    std::normal_distribution<double> normal(0.0, noise_std / std::sqrt(static_cast<double>(base.size())));
    std::vector<double> v(base.size());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        v[i] = base[i] + normal(rng);
        norm2 += v[i] * v[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    Embedding e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = static_cast<float>(v[i] * inv);
    return e;
}

template <typename Rng>
Embedding synth_embedding(std::uint64_t identity_seed, int dim, double noise_std, Rng& frame_rng) {
    return perturb_embedding(base_embedding(identity_seed, dim), noise_std, frame_rng);
}

struct SyntheticScene {
    std::vector<GroundTruthRecord> ground_truth;
    std::vector<Detection> detections;
    /// Index into ground_truth of the record each detection was rendered from.
    std::vector<std::size_t> detection_source;
};

namespace detail {

inline double wrap_deg(double a) {
    a = std::fmod(a, 360.0);
    if (a < 0.0) a += 360.0;
    return a;
}

// Signed difference b - a in (-180, 180].
inline double angle_diff_deg(double a, double b) {
    double d = wrap_deg(b - a);
    return d > 180.0 ? d - 360.0 : d;
}

// Seeds for independent random streams derived from one scene seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct Agent {
    Location3D position;
    Location3D waypoint;
    double heading_rad = 0.0;
    double speed = 0.0;
};

template <typename Rng>
Location3D sample_annulus(double r_min, double r_max, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = std::sqrt(r_min * r_min + unit(rng) * (r_max * r_max - r_min * r_min));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    return Location3D{r * std::sin(a), r * std::cos(a)};
}

template <typename Rng>
void advance(Agent& agent, const SceneConfig& cfg, Rng& rng) {
    const double r_max = 0.9 * cfg.arena_radius_m;
    const double r_min = std::min(cfg.min_radius_m + 0.5, r_max);
    if (distance(agent.position, agent.waypoint) < std::max(0.5, agent.speed)) {
        agent.waypoint = sample_annulus(r_min, r_max, rng);
    }
    const double desired = std::atan2(agent.waypoint.x_m - agent.position.x_m,
                                      agent.waypoint.z_m - agent.position.z_m);
    double turn = std::remainder(desired - agent.heading_rad, 2.0 * std::numbers::pi);
    const double max_turn = cfg.max_turn_deg * std::numbers::pi / 180.0;
    turn = std::clamp(turn, -max_turn, max_turn);
    agent.heading_rad += turn;

    const double dx = agent.speed * std::sin(agent.heading_rad);
    const double dz = agent.speed * std::cos(agent.heading_rad);
    Location3D next{agent.position.x_m + dx, agent.position.z_m + dz};

    if (std::hypot(next.x_m, next.z_m) < cfg.min_radius_m) {
        // Sidestep tangentially; this only ever increases the radius.
        const double r = std::hypot(agent.position.x_m, agent.position.z_m);
        double tx = -agent.position.z_m / r;
        double tz = agent.position.x_m / r;
        if (tx * dx + tz * dz < 0.0) {
            tx = -tx;
            tz = -tz;
        }
        next = Location3D{agent.position.x_m + agent.speed * tx, agent.position.z_m + agent.speed * tz};
    }
    const double r_next = std::hypot(next.x_m, next.z_m);
    if (r_next > cfg.arena_radius_m) {
        next.x_m *= cfg.arena_radius_m / r_next;
        next.z_m *= cfg.arena_radius_m / r_next;
    }
    agent.position = next;
}

// Views that see a person at `azimuth_deg` (0 along +Z, 90 along +X).
inline std::vector<const ViewConfig*> covering_views(const PanoramaRig& rig, double azimuth_deg,
                                                     double overlap_deg) {
    std::vector<const ViewConfig*> out;
    const ViewConfig* nearest = nullptr;
    double best = 1e9;
    for (const ViewConfig& v : rig.views()) {
        const double d = std::abs(angle_diff_deg(v.yaw_deg, azimuth_deg));
        if (d < best) {
            best = d;
            nearest = &v;
        }
    }
    if (overlap_deg <= 0.0 || rig.views().size() < 2) {
        if (nearest != nullptr) out.push_back(nearest);
        return out;
    }
    const double half_sector = 180.0 / static_cast<double>(rig.views().size());
    for (const ViewConfig& v : rig.views()) {
        const double d = std::abs(angle_diff_deg(v.yaw_deg, azimuth_deg));
        if (d < std::min(half_sector + 0.5 * overlap_deg, 89.0)) out.push_back(&v);
    }
    return out;
}

template <typename Rng>
std::vector<Keypoint> render_skeleton(const ViewConfig& view, const Location3D& where, const SceneConfig& cfg,
                                      Rng& noise_rng) {
    const Eigen::Vector3d cam = to_camera(view, Eigen::Vector3d(where.x_m, 0.0, where.z_m));
    const SkeletonProportions& s = cfg.skeleton;
    const CameraIntrinsics& k = view.intrinsics;
    std::normal_distribution<double> noise(0.0, 1.0);

    struct Joint3 {
        Joint joint;
        double lateral;
        double height_fraction;
    };
    const Joint3 joints[] = {
        {Joint::kNose, 0.0, s.nose},
        {Joint::kLeftShoulder, -s.shoulder_half_width_m, s.shoulder},
        {Joint::kRightShoulder, s.shoulder_half_width_m, s.shoulder},
        {Joint::kLeftHip, -s.hip_half_width_m, s.hip},
        {Joint::kRightHip, s.hip_half_width_m, s.hip},
        {Joint::kLeftAnkle, -s.ankle_half_width_m, s.ankle},
        {Joint::kRightAnkle, s.ankle_half_width_m, s.ankle},
    };
    std::vector<Keypoint> out;
    for (const Joint3& j : joints) {
        // Camera Y points down; the ground sits camera_height below the optical centre.
        const double x = cam.x() + j.lateral;
        const double y = cfg.camera_height_m - j.height_fraction * cfg.agent_height_m;
        double u = k.fx * x / cam.z() + k.cx;
        double v = k.fy * y / cam.z() + k.cy;
        if (cfg.keypoint_noise_px > 0.0) {
            u += cfg.keypoint_noise_px * noise(noise_rng);
            v += cfg.keypoint_noise_px * noise(noise_rng);
        }
        out.push_back(Keypoint{j.joint, u, v, cfg.keypoint_confidence});
    }
    return out;
}

}  // namespace detail

/// Simulates agents walking inside the arena, renders each through the
/// rig into keypoints plus an embedding, and returns the paired ground
/// truth. Frames are numbered 1..n_frames. Output depends only on
/// (config, rig).
inline SyntheticScene generate_scene(const SceneConfig& config, const PanoramaRig& rig) {
    config.validate();
    if (rig.views().empty()) throw Error(ErrorCode::kInvalidConfig, "rig has no views");

    std::mt19937_64 motion_rng(detail::mix_seed(config.seed, 0));
    std::mt19937_64 keypoint_rng(detail::mix_seed(config.seed, 1));
    std::mt19937_64 embedding_rng(detail::mix_seed(config.seed, 2));
    std::mt19937_64 dropout_rng(detail::mix_seed(config.seed, 3));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double r_max = 0.9 * config.arena_radius_m;
    const double r_min = std::min(config.min_radius_m + 0.5, r_max);
    std::vector<detail::Agent> agents(static_cast<std::size_t>(config.n_agents));
    std::vector<Embedding> bases;
    for (std::size_t a = 0; a < agents.size(); ++a) {
        detail::Agent& agent = agents[a];
        agent.position = detail::sample_annulus(r_min, r_max, motion_rng);
        agent.waypoint = detail::sample_annulus(r_min, r_max, motion_rng);
        agent.heading_rad = 2.0 * std::numbers::pi * unit(motion_rng);
        agent.speed = config.speed_min_m + (config.speed_max_m - config.speed_min_m) * unit(motion_rng);
        bases.push_back(base_embedding(detail::mix_seed(config.seed, 1000 + a), config.embedding_dim));
    }

    SyntheticScene scene;
    for (int frame = 1; frame <= config.n_frames; ++frame) {
        if (frame > 1) {
            for (detail::Agent& agent : agents) detail::advance(agent, config, motion_rng);
        }
        for (std::size_t a = 0; a < agents.size(); ++a) {
            const Location3D where = agents[a].position;
            scene.ground_truth.push_back(GroundTruthRecord{frame, static_cast<int>(a) + 1, where});
            const std::size_t gt_index = scene.ground_truth.size() - 1;

            const bool dropped = unit(dropout_rng) < config.detection_dropout_prob;
            const bool occluded = std::any_of(config.occlusions.begin(), config.occlusions.end(),
                                              [&](const OcclusionEpisode& o) {
                                                  return o.covers(static_cast<int>(a), frame);
                                              });
            if (dropped || occluded) continue;

            const double azimuth = detail::wrap_deg(std::atan2(where.x_m, where.z_m) * 180.0 / std::numbers::pi);
            for (const ViewConfig* view : detail::covering_views(rig, azimuth, config.overlap_deg)) {
                Detection det;
                det.frame_id = frame;
                det.view_id = view->view_id;
                det.keypoints = detail::render_skeleton(*view, where, config, keypoint_rng);
                det.embedding = perturb_embedding(bases[a], config.embedding_noise_std, embedding_rng);
                scene.detections.push_back(std::move(det));
                scene.detection_source.push_back(gt_index);
            }
        }
    }
    return scene;
}

}  // namespace panotrack
