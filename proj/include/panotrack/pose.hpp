// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace panotrack {

// COCO-17 joint order.
enum class Joint {
    kNose,
    kLeftEye,
    kRightEye,
    kLeftEar,
    kRightEar,
    kLeftShoulder,
    kRightShoulder,
    kLeftElbow,
    kRightElbow,
    kLeftWrist,
    kRightWrist,
    kLeftHip,
    kRightHip,
    kLeftKnee,
    kRightKnee,
    kLeftAnkle,
    kRightAnkle,
};

inline constexpr std::array<std::string_view, 17> kJointNames = {
    "nose",          "left_eye",       "right_eye",  "left_ear",    "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
    "right_wrist",   "left_hip",       "right_hip",  "left_knee",   "right_knee",
    "left_ankle",    "right_ankle",
};

inline std::string_view joint_name(Joint joint) {
    return kJointNames[static_cast<std::size_t>(joint)];
}

inline std::optional<Joint> parse_joint(std::string_view name) {
    for (std::size_t i = 0; i < kJointNames.size(); ++i) {
        if (kJointNames[i] == name) return static_cast<Joint>(i);
    }
    return std::nullopt;
}

struct Keypoint {
    Joint joint = Joint::kNose;
    double u = 0.0;
    double v = 0.0;
    double confidence = 0.0;

    bool operator==(const Keypoint&) const = default;
};

}  // namespace panotrack
