// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "panotrack/error.hpp"
#include "panotrack/pose.hpp"

namespace panotrack {

inline constexpr double kDefaultBodyHeightM = 1.7;

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    bool operator==(const CameraIntrinsics&) const = default;
};

struct ViewConfig {
    int view_id = 0;
    double yaw_deg = 0.0;
    CameraIntrinsics intrinsics;
    int image_width = 1;
    int image_height = 1;

    bool operator==(const ViewConfig&) const = default;
};

/// Ground-plane location in the shared panoramic frame. Y is fixed at 0.
struct Location3D {
    double x_m = 0.0;
    double z_m = 0.0;

    bool operator==(const Location3D&) const = default;
};

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
};

using RotationMatrix = Eigen::Matrix3d;

inline double distance(const Location3D& a, const Location3D& b) {
    return std::hypot(a.x_m - b.x_m, a.z_m - b.z_m);
}

/// A set of co-centred pinhole views related by pure yaw, plus the stature
/// prior used to recover depth. Validated on construction.
class PanoramaRig {
public:
    PanoramaRig() = default;

    explicit PanoramaRig(std::vector<ViewConfig> views, double body_height_m = kDefaultBodyHeightM)
        : views_(std::move(views)), body_height_m_(body_height_m) {
        validate();
    }

    const std::vector<ViewConfig>& views() const { return views_; }
    double body_height_m() const { return body_height_m_; }

    bool has_view(int view_id) const { return find(view_id) != nullptr; }

    const ViewConfig& view(int view_id) const {
        const ViewConfig* found = find(view_id);
        if (found == nullptr) {
            throw Error(ErrorCode::kUnknownView, "view " + std::to_string(view_id) + " not in rig");
        }
        return *found;
    }

    /// Same views with a different stature prior.
    PanoramaRig with_body_height(double body_height_m) const {
        return PanoramaRig(views_, body_height_m);
    }

    /// Four 90-degree views at yaw 0/90/180/270 sharing one set of intrinsics.
    static PanoramaRig four_view(const CameraIntrinsics& intrinsics, int width, int height,
                                 double body_height_m = kDefaultBodyHeightM) {
        std::vector<ViewConfig> views;
        for (int i = 0; i < 4; ++i) {
            views.push_back(ViewConfig{i, 90.0 * i, intrinsics, width, height});
        }
        return PanoramaRig(std::move(views), body_height_m);
    }

private:
    const ViewConfig* find(int view_id) const {
        auto it = std::find_if(views_.begin(), views_.end(),
                               [view_id](const ViewConfig& v) { return v.view_id == view_id; });
        return it == views_.end() ? nullptr : &*it;
    }

    void validate() const {
        if (!(body_height_m_ > 0.0) || !std::isfinite(body_height_m_)) {
            throw Error(ErrorCode::kInvalidRig, "body_height_m must be positive");
        }
        for (std::size_t i = 0; i < views_.size(); ++i) {
            const ViewConfig& v = views_[i];
            const CameraIntrinsics& k = v.intrinsics;
            if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.fx) || !std::isfinite(k.fy) ||
                !std::isfinite(k.cx) || !std::isfinite(k.cy)) {
                throw Error(ErrorCode::kInvalidRig, "view " + std::to_string(v.view_id) +
                                                        ": focal lengths must be positive and finite");
            }
            if (!(v.yaw_deg >= 0.0 && v.yaw_deg < 360.0)) {
                throw Error(ErrorCode::kInvalidRig,
                            "view " + std::to_string(v.view_id) + ": yaw_deg must be in [0, 360)");
            }
            if (v.image_width <= 0 || v.image_height <= 0) {
                throw Error(ErrorCode::kInvalidRig,
                            "view " + std::to_string(v.view_id) + ": image size must be positive");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (views_[j].view_id == v.view_id) {
                    throw Error(ErrorCode::kInvalidRig, "duplicate view_id " + std::to_string(v.view_id));
                }
                if (views_[j].yaw_deg == v.yaw_deg) {
                    throw Error(ErrorCode::kInvalidRig, "duplicate yaw_deg for view " +
                                                            std::to_string(v.view_id));
                }
            }
        }
    }

    std::vector<ViewConfig> views_;
    double body_height_m_ = kDefaultBodyHeightM;
};

/// Rotation about the vertical axis taking panoramic coordinates into the
/// camera frame of the view at `yaw_deg`: p_cam = R * p_pano.
/// Multiples of 90 degrees use exact sine/cosine values.
inline RotationMatrix rotation_y(double yaw_deg) {
    double wrapped = std::fmod(yaw_deg, 360.0);
    if (wrapped < 0.0) wrapped += 360.0;
    double c = 0.0;
    double s = 0.0;
    if (wrapped == 0.0) {
        c = 1.0;
    } else if (wrapped == 90.0) {
        s = 1.0;
    } else if (wrapped == 180.0) {
        c = -1.0;
    } else if (wrapped == 270.0) {
        s = -1.0;
    } else {
        const double rad = wrapped * std::numbers::pi / 180.0;
        c = std::cos(rad);
        s = std::sin(rad);
    }
    RotationMatrix r;
    r << c, 0.0, -s,
         0.0, 1.0, 0.0,
         s, 0.0, c;
    return r;
}

/// Camera-frame coordinates (X right, Y down, Z forward) of a panoramic point.
inline Eigen::Vector3d to_camera(const ViewConfig& view, const Eigen::Vector3d& pano) {
    return rotation_y(view.yaw_deg) * pano;
}

/// Full pinhole projection of a panoramic point into `view_id`.
inline PixelPoint project(const PanoramaRig& rig, int view_id, const Eigen::Vector3d& pano) {
    const ViewConfig& view = rig.view(view_id);
    const Eigen::Vector3d cam = to_camera(view, pano);
    if (!(cam.z() > 0.0)) {
        throw Error(ErrorCode::kBehindCamera,
                    "point is not in front of view " + std::to_string(view_id));
    }
    const CameraIntrinsics& k = view.intrinsics;
    return PixelPoint{k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy};
}

struct PoseHeuristics {
    /// Keypoints below this confidence are ignored.
    double visibility_threshold = 0.3;
    /// Stature / (hip row - shoulder row) when feet or nose are missing.
    double torso_to_stature = 3.3;
};

namespace detail {

inline const Keypoint* visible(std::span<const Keypoint> keypoints, Joint joint, double tau) {
    for (const Keypoint& kp : keypoints) {
        if (kp.joint == joint && kp.confidence >= tau) return &kp;
    }
    return nullptr;
}

// Mean of `field` over the visible members of `joints`; false if none visible.
template <typename Field>
bool visible_mean(std::span<const Keypoint> keypoints, std::initializer_list<Joint> joints,
                  double tau, Field field, double& mean, int& count) {
    double sum = 0.0;
    count = 0;
    for (Joint joint : joints) {
        if (const Keypoint* kp = visible(keypoints, joint, tau)) {
            sum += field(*kp);
            ++count;
        }
    }
    if (count == 0) return false;
    mean = sum / count;
    return true;
}

}  // namespace detail

/// Pixel-space body height of one person.
///
/// Uses nose-to-ankle span when the nose and at least one ankle are visible;
/// otherwise scales the shoulder-to-hip span by `torso_to_stature`, which
/// needs both shoulders and both hips.
inline double estimate_pixel_height(std::span<const Keypoint> keypoints,
                                    const PoseHeuristics& heuristics = {}) {
    const double tau = heuristics.visibility_threshold;
    const auto row = [](const Keypoint& kp) { return kp.v; };

    const auto n_visible = std::count_if(keypoints.begin(), keypoints.end(),
                                         [tau](const Keypoint& kp) { return kp.confidence >= tau; });
    if (n_visible < 2) {
        throw Error(ErrorCode::kInsufficientKeypoints, "fewer than two visible keypoints");
    }

    double height = 0.0;
    double ankle_v = 0.0;
    int n_ankles = 0;
    const Keypoint* nose = detail::visible(keypoints, Joint::kNose, tau);
    if (nose != nullptr &&
        detail::visible_mean(keypoints, {Joint::kLeftAnkle, Joint::kRightAnkle}, tau, row, ankle_v,
                             n_ankles)) {
        height = ankle_v - nose->v;
    } else {
        double shoulder_v = 0.0;
        double hip_v = 0.0;
        int n_shoulders = 0;
        int n_hips = 0;
        detail::visible_mean(keypoints, {Joint::kLeftShoulder, Joint::kRightShoulder}, tau, row,
                             shoulder_v, n_shoulders);
        detail::visible_mean(keypoints, {Joint::kLeftHip, Joint::kRightHip}, tau, row, hip_v, n_hips);
        if (n_shoulders != 2 || n_hips != 2) {
            throw Error(ErrorCode::kInsufficientKeypoints,
                        "need nose+ankle or both shoulders and both hips");
        }
        height = heuristics.torso_to_stature * (hip_v - shoulder_v);
    }
    if (!(height > 0.0)) {
        throw Error(ErrorCode::kNonPositiveHeight, "pixel height " + std::to_string(height));
    }
    return height;
}

/// Image column that stands for the person's ground position: hips, then
/// shoulders, then every visible keypoint.
inline double reference_column(std::span<const Keypoint> keypoints,
                               double visibility_threshold = PoseHeuristics{}.visibility_threshold) {
    const double tau = visibility_threshold;
    const auto column = [](const Keypoint& kp) { return kp.u; };
    double mean = 0.0;
    int count = 0;
    if (detail::visible_mean(keypoints, {Joint::kLeftHip, Joint::kRightHip}, tau, column, mean, count) ||
        detail::visible_mean(keypoints, {Joint::kLeftShoulder, Joint::kRightShoulder}, tau, column,
                             mean, count)) {
        return mean;
    }
    double sum = 0.0;
    for (const Keypoint& kp : keypoints) {
        if (kp.confidence >= tau) {
            sum += kp.u;
            ++count;
        }
    }
    if (count == 0) throw Error(ErrorCode::kInsufficientKeypoints, "no visible keypoints");
    return sum / count;
}

/// Inverts the projection under the constant-stature prior. The pixel height
/// fixes camera depth, the reference column fixes the lateral offset, and the
/// result is rotated back into the panoramic frame with Y dropped.
inline Location3D localize(const PanoramaRig& rig, int view_id, double u_ref, double h_body) {
    if (!(h_body > 0.0) || !std::isfinite(h_body)) {
        throw Error(ErrorCode::kDegenerateHeight, "pixel height must be positive");
    }
    const ViewConfig& view = rig.view(view_id);
    const CameraIntrinsics& k = view.intrinsics;
    const double z_cam = k.fy * rig.body_height_m() / h_body;
    const double x_cam = (u_ref - k.cx) * z_cam / k.fx;
    const Eigen::Vector3d pano = rotation_y(view.yaw_deg).transpose() * Eigen::Vector3d(x_cam, 0.0, z_cam);
    return Location3D{pano.x(), pano.z()};
}

/// Anything carrying a view, a reference column and a ground location.
template <typename T>
concept LocalizedObservation = requires(const T& t) {
    { t.view_id } -> std::convertible_to<int>;
    { t.u_ref } -> std::convertible_to<double>;
    { t.location } -> std::convertible_to<Location3D>;
};

inline constexpr double kDefaultMergeRadiusM = 0.0;

/// Collapses detections of one person seen by two adjacent views. Of each
/// cross-view pair closer than `merge_radius_m`, the one whose column lies
/// farther from its image's left/right border survives. Radius 0 disables.
/// Survivors keep their input order.
template <LocalizedObservation T>
std::vector<T> merge_cross_view_duplicates(const PanoramaRig& rig, std::vector<T> observations,
                                           double merge_radius_m = kDefaultMergeRadiusM) {
    if (!(merge_radius_m > 0.0) || observations.size() < 2) return observations;

    std::vector<double> border_margin(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const ViewConfig& view = rig.view(observations[i].view_id);
        const double u = observations[i].u_ref;
        border_margin[i] = std::min(u, static_cast<double>(view.image_width) - u);
    }

    std::vector<bool> keep(observations.size(), true);
    for (std::size_t i = 0; i < observations.size(); ++i) {
        for (std::size_t j = i + 1; j < observations.size() && keep[i]; ++j) {
            if (!keep[j] || observations[i].view_id == observations[j].view_id) continue;
            if (distance(observations[i].location, observations[j].location) >= merge_radius_m) continue;
            if (border_margin[j] > border_margin[i]) {
                keep[i] = false;
            } else {
                keep[j] = false;
            }
        }
    }

    std::vector<T> survivors;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        if (keep[i]) survivors.push_back(std::move(observations[i]));
    }
    return survivors;
}

}  // namespace panotrack
