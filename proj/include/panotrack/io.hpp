// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "panotrack/error.hpp"
#include "panotrack/geometry.hpp"
#include "panotrack/metrics.hpp"
#include "panotrack/synth.hpp"
#include "panotrack/tracker.hpp"

namespace panotrack::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Rig

inline PanoramaRig rig_from_json(const json& j) {
    try {
        std::vector<ViewConfig> views;
        for (const json& v : j.at("views")) {
            ViewConfig view;
            view.view_id = v.at("view_id").get<int>();
            view.yaw_deg = v.at("yaw_deg").get<double>();
            view.intrinsics.fx = v.at("fx").get<double>();
            view.intrinsics.fy = v.at("fy").get<double>();
            view.intrinsics.cx = v.at("cx").get<double>();
            view.intrinsics.cy = v.at("cy").get<double>();
            view.image_width = v.at("width").get<int>();
            view.image_height = v.at("height").get<int>();
            views.push_back(view);
        }
        return PanoramaRig(std::move(views), j.value("body_height_m", kDefaultBodyHeightM));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kSchema, std::string("rig: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::kSchema, std::string("rig: ") + e.what());
    }
}

inline json rig_to_json(const PanoramaRig& rig) {
    json views = json::array();
    for (const ViewConfig& v : rig.views()) {
        views.push_back({{"view_id", v.view_id},
                         {"yaw_deg", v.yaw_deg},
                         {"fx", v.intrinsics.fx},
                         {"fy", v.intrinsics.fy},
                         {"cx", v.intrinsics.cx},
                         {"cy", v.intrinsics.cy},
                         {"width", v.image_width},
                         {"height", v.image_height}});
    }
    return json{{"body_height_m", rig.body_height_m()}, {"views", views}};
}

// ---------------------------------------------------------------------------
// Detection records

inline Detection detection_from_json(const json& j) {
    Detection det;
    det.frame_id = j.at("frame").get<int>();
    if (det.frame_id < 0) throw Error(ErrorCode::kSchema, "frame must be >= 0");
    det.view_id = j.at("view").get<int>();
    for (const json& kp : j.at("keypoints")) {
        const std::string name = kp.at("name").get<std::string>();
        const auto joint = parse_joint(name);
        if (!joint) throw Error(ErrorCode::kSchema, "unknown keypoint name '" + name + "'");
        const double conf = kp.at("conf").get<double>();
        if (!(conf >= 0.0 && conf <= 1.0)) throw Error(ErrorCode::kSchema, "keypoint confidence outside [0, 1]");
        det.keypoints.push_back(Keypoint{*joint, kp.at("u").get<double>(), kp.at("v").get<double>(), conf});
    }
    det.embedding = j.at("embedding").get<std::vector<float>>();
    return det;
}

inline json detection_to_json(const Detection& det) {
    json kps = json::array();
    for (const Keypoint& kp : det.keypoints) {
        kps.push_back({{"name", std::string(joint_name(kp.joint))}, {"u", kp.u}, {"v", kp.v}, {"conf", kp.confidence}});
    }
    return json{{"frame", det.frame_id}, {"view", det.view_id}, {"keypoints", kps}, {"embedding", det.embedding}};
}

// ---------------------------------------------------------------------------
// Tracklet, ground-truth and localization records

inline json tracklet_to_json(const TrackletRecord& r) {
    json j{{"frame", r.frame}, {"id", r.id}, {"x", r.location.x_m}, {"z", r.location.z_m}, {"estimated", r.estimated}};
    j["view"] = r.view ? json(*r.view) : json(nullptr);
    j["u"] = r.u ? json(*r.u) : json(nullptr);
    return j;
}

inline TrackletRecord tracklet_from_json(const json& j) {
    TrackletRecord r;
    r.frame = j.at("frame").get<int>();
    r.id = j.at("id").get<int>();
    r.location = Location3D{j.at("x").get<double>(), j.at("z").get<double>()};
    r.estimated = j.value("estimated", false);
    if (j.contains("view") && !j["view"].is_null()) r.view = j["view"].get<int>();
    if (j.contains("u") && !j["u"].is_null()) r.u = j["u"].get<double>();
    return r;
}

inline json ground_truth_to_json(const GroundTruthRecord& r) {
    return json{{"frame", r.frame}, {"id", r.id}, {"x", r.location.x_m}, {"z", r.location.z_m}};
}

inline GroundTruthRecord ground_truth_from_json(const json& j) {
    return GroundTruthRecord{j.at("frame").get<int>(), j.at("id").get<int>(),
                             Location3D{j.at("x").get<double>(), j.at("z").get<double>()}};
}

inline json localized_to_json(const Detection& det) {
    return json{{"frame", det.frame_id}, {"view", det.view_id}, {"x", det.location.x_m},
                {"z", det.location.z_m}, {"u", det.u_ref}, {"h", det.h_body}};
}

// ---------------------------------------------------------------------------
// Scene config

inline SceneConfig scene_config_from_json(const json& j) {
    SceneConfig c;
    try {
        c.n_agents = j.value("n_agents", c.n_agents);
        c.n_frames = j.value("n_frames", c.n_frames);
        c.arena_radius_m = j.value("arena_radius_m", c.arena_radius_m);
        c.min_radius_m = j.value("min_radius_m", c.min_radius_m);
        c.speed_min_m = j.value("speed_min_m", c.speed_min_m);
        c.speed_max_m = j.value("speed_max_m", c.speed_max_m);
        c.max_turn_deg = j.value("max_turn_deg", c.max_turn_deg);
        c.agent_height_m = j.value("agent_height_m", c.agent_height_m);
        c.camera_height_m = j.value("camera_height_m", c.camera_height_m);
        c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
        c.embedding_noise_std = j.value("embedding_noise_std", c.embedding_noise_std);
        c.keypoint_noise_px = j.value("keypoint_noise_px", c.keypoint_noise_px);
        c.keypoint_confidence = j.value("keypoint_confidence", c.keypoint_confidence);
        c.detection_dropout_prob = j.value("detection_dropout_prob", c.detection_dropout_prob);
        c.overlap_deg = j.value("overlap_deg", c.overlap_deg);
        c.seed = j.value("seed", c.seed);
        if (j.contains("occlusions")) {
            for (const json& o : j.at("occlusions")) {
                c.occlusions.push_back(OcclusionEpisode{o.at("agent").get<int>(), o.at("start").get<int>(),
                                                        o.at("length").get<int>()});
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kInvalidConfig, std::string("scene config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << contents;
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kSchema, path.string() + ": " + e.what());
    }
}

inline PanoramaRig load_rig(const std::filesystem::path& path) { return rig_from_json(read_json_file(path)); }

/// Calls `on_record(json, line_number)` for every non-blank line. Parse and
/// schema failures are rethrown as SchemaError tagged with the line number.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const json&, int)>& on_record) {
    const std::string text = read_file(path);
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            on_record(json::parse(line), line_no);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::kSchema, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kSchema) throw;
            throw Error(ErrorCode::kSchema, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

struct DetectionFile {
    std::vector<Detection> detections;
    std::vector<int> line_numbers;
};

inline DetectionFile load_detections(const std::filesystem::path& path) {
    DetectionFile file;
    std::optional<std::size_t> dim;
    for_each_jsonl(path, [&](const json& j, int line_no) {
        Detection det = detection_from_json(j);
        if (!dim) dim = det.embedding.size();
        if (det.embedding.size() != *dim) {
            throw Error(ErrorCode::kSchema, "embedding length " + std::to_string(det.embedding.size()) +
                                                " differs from " + std::to_string(*dim));
        }
        file.detections.push_back(std::move(det));
        file.line_numbers.push_back(line_no);
    });
    return file;
}

inline std::vector<GroundTruthRecord> load_ground_truth(const std::filesystem::path& path) {
    std::vector<GroundTruthRecord> out;
    std::set<std::pair<int, int>> seen;
    for_each_jsonl(path, [&](const json& j, int) {
        GroundTruthRecord r = ground_truth_from_json(j);
        if (!seen.insert({r.frame, r.id}).second) {
            throw Error(ErrorCode::kSchema, "duplicate (frame, id) (" + std::to_string(r.frame) + ", " +
                                                std::to_string(r.id) + ")");
        }
        out.push_back(r);
    });
    return out;
}

inline std::vector<TrackletRecord> load_tracklets(const std::filesystem::path& path) {
    std::vector<TrackletRecord> out;
    for_each_jsonl(path, [&](const json& j, int) { out.push_back(tracklet_from_json(j)); });
    return out;
}

template <typename Range, typename ToJson>
std::string to_jsonl(const Range& records, ToJson to_json) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

}  // namespace panotrack::io
