// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "panotrack/io.hpp"
#include "panotrack/metrics.hpp"
#include "panotrack/synth.hpp"
#include "panotrack/tracker.hpp"

namespace panotrack::cli {

enum ExitCode : int {
    kOk = 0,
    kIoError = 2,
    kSchemaError = 3,
    kConfigInvalid = 4,
    kEmptyGroundTruth = 5,
};

inline int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::kIo: return kIoError;
        case ErrorCode::kInvalidConfig: return kConfigInvalid;
        case ErrorCode::kEmptyGroundTruth: return kEmptyGroundTruth;
        default: return kSchemaError;
    }
}

struct LocalizeArgs {
    std::filesystem::path rig;
    std::filesystem::path detections;
    std::filesystem::path out;
    PoseHeuristics pose;
};

struct TrackArgs {
    std::filesystem::path rig;
    std::filesystem::path detections;
    std::filesystem::path out;
    TrackerConfig config;
};

struct EvalArgs {
    std::filesystem::path ground_truth;
    std::filesystem::path predictions;
    EvalOptions options{1.0, {0.5, 1.0, 2.0}, 10.0};
    bool json_output = false;
    bool exclude_estimated = false;
};

struct SynthArgs {
    std::filesystem::path scene_config;
    std::filesystem::path rig;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
};

namespace detail {

template <typename Body>
int guarded(std::ostream& err, Body body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace detail

/// Localizes every detection independently. Detections whose pose cannot be
/// turned into a height are skipped with a warning.
inline int cmd_localize(const LocalizeArgs& args, std::ostream& err) {
    return detail::guarded(err, [&] {
        const PanoramaRig rig = io::load_rig(args.rig);
        io::DetectionFile file = io::load_detections(args.detections);
        std::string out;
        for (std::size_t i = 0; i < file.detections.size(); ++i) {
            Detection& det = file.detections[i];
            if (!rig.has_view(det.view_id)) {
                throw Error(ErrorCode::kSchema, args.detections.string() + ":" +
                                                    std::to_string(file.line_numbers[i]) + ": view " +
                                                    std::to_string(det.view_id) + " not in rig");
            }
            try {
                localize_detection(rig, det, args.pose);
            } catch (const Error& e) {
                err << "warning: line " << file.line_numbers[i] << ": skipped: " << e.what() << '\n';
                continue;
            }
            out += io::localized_to_json(det).dump();
            out += '\n';
        }
        io::write_file(args.out, out);
        return static_cast<int>(kOk);
    });
}

inline int cmd_track(const TrackArgs& args, std::ostream& err) {
    return detail::guarded(err, [&] {
        args.config.validate();
        const PanoramaRig rig = io::load_rig(args.rig);
        io::DetectionFile file = io::load_detections(args.detections);
        for (std::size_t i = 0; i < file.detections.size(); ++i) {
            if (!rig.has_view(file.detections[i].view_id)) {
                throw Error(ErrorCode::kSchema, args.detections.string() + ":" +
                                                    std::to_string(file.line_numbers[i]) + ": view " +
                                                    std::to_string(file.detections[i].view_id) + " not in rig");
            }
        }
        const std::vector<int> lines = file.line_numbers;
        const std::vector<Frame> frames =
            prepare_frames(rig, std::move(file.detections), args.config, [&](std::size_t index, const Error& e) {
                err << "warning: line " << lines[index] << ": skipped: " << e.what() << '\n';
            });
        TrackerStats stats;
        const std::vector<TrackletRecord> tracklets = run(args.config, frames, rig.body_height_m(), &stats);
        io::write_file(args.out, io::to_jsonl(tracklets, io::tracklet_to_json));
        err << "frames: " << stats.frames << ", tracks created: " << stats.tracks_created
            << ", tracks retired: " << stats.tracks_retired << ", records: " << tracklets.size() << '\n';
        return static_cast<int>(kOk);
    });
}

inline io::json report_to_json(const EvalReport& r) {
    io::json precision = io::json::object();
    for (const auto& [threshold, fraction] : r.loc_precision) {
        std::ostringstream key;
        key << threshold;
        precision[key.str()] = fraction;
    }
    return io::json{{"mota", r.mota},   {"mt", r.mt_fraction},     {"ml", r.ml_fraction},
                    {"fp", r.fp},       {"fn", r.fn},              {"idsw", r.idsw},
                    {"total_gt", r.total_gt}, {"matches", r.matches}, {"gt_identities", r.gt_identities},
                    {"frames", r.frames}, {"loc_precision", precision}};
}

inline void print_report_table(const EvalReport& r, const EvalOptions& options, std::ostream& out) {
    out << std::fixed << std::setprecision(4);
    out << "gate " << options.dist_threshold_m << " m";
    if (std::isfinite(options.eval_radius_m)) out << ", radius " << options.eval_radius_m << " m";
    out << '\n';
    out << "  MOTA  " << r.mota << '\n';
    out << "  MT    " << r.mt_fraction << '\n';
    out << "  ML    " << r.ml_fraction << '\n';
    out << "  FP    " << r.fp << '\n';
    out << "  FN    " << r.fn << '\n';
    out << "  IDSW  " << r.idsw << '\n';
    out << "  GT    " << r.total_gt << " points, " << r.gt_identities << " identities, " << r.frames
        << " frames\n";
    for (const auto& [threshold, fraction] : r.loc_precision) {
        out << "  precision < " << threshold << " m  " << fraction << '\n';
    }
}

inline int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const std::vector<GroundTruthRecord> gt = io::load_ground_truth(args.ground_truth);
        std::vector<TrackletRecord> pred = io::load_tracklets(args.predictions);
        if (args.exclude_estimated) std::erase_if(pred, [](const TrackletRecord& r) { return r.estimated; });
        const EvalReport report = evaluate<GroundTruthRecord, TrackletRecord>(gt, pred, args.options);
        if (args.json_output) {
            out << report_to_json(report).dump() << '\n';
        } else {
            print_report_table(report, args.options, out);
        }
        return static_cast<int>(kOk);
    });
}

inline int cmd_synth(const SynthArgs& args, std::ostream& err) {
    return detail::guarded(err, [&] {
        SceneConfig config;
        try {
            config = io::scene_config_from_json(io::read_json_file(args.scene_config));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kSchema) throw Error(ErrorCode::kInvalidConfig, e.what());
            throw;
        }
        if (args.seed) config.seed = *args.seed;
        const PanoramaRig rig = io::load_rig(args.rig);
        const SyntheticScene scene = generate_scene(config, rig);

        std::error_code ec;
        std::filesystem::create_directories(args.out_dir, ec);
        if (ec) throw Error(ErrorCode::kIo, "cannot create " + args.out_dir.string() + ": " + ec.message());
        io::write_file(args.out_dir / "detections.jsonl", io::to_jsonl(scene.detections, io::detection_to_json));
        io::write_file(args.out_dir / "ground_truth.jsonl",
                       io::to_jsonl(scene.ground_truth, io::ground_truth_to_json));
        err << "frames: " << config.n_frames << ", agents: " << config.n_agents
            << ", detections: " << scene.detections.size() << '\n';
        return static_cast<int>(kOk);
    });
}

}  // namespace panotrack::cli
