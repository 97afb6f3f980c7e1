// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "panotrack/cli.hpp"

namespace {

std::vector<double> parse_thresholds(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace panotrack;

    CLI::App app{"Panoramic multi-person localization and tracking"};
    app.require_subcommand(1);

    cli::LocalizeArgs localize_args;
    auto* localize = app.add_subcommand("localize", "Localize every detection on the ground plane");
    localize->add_option("rig", localize_args.rig, "Rig JSON")->required();
    localize->add_option("detections", localize_args.detections, "Detection JSONL")->required();
    localize->add_option("out", localize_args.out, "Output JSONL")->required();
    localize->add_option("--visibility", localize_args.pose.visibility_threshold, "Keypoint confidence threshold");
    localize->add_option("--torso-ratio", localize_args.pose.torso_to_stature, "Stature / torso length");

    cli::TrackArgs track_args;
    double track_h_body = 0.0;
    bool no_appearance = false;
    auto* track = app.add_subcommand("track", "Track people across frames");
    track->add_option("rig", track_args.rig, "Rig JSON")->required();
    track->add_option("detections", track_args.detections, "Detection JSONL")->required();
    track->add_option("out", track_args.out, "Output tracklet JSONL")->required();
    track->add_option("--epsilon", track_args.config.epsilon, "Matching cost threshold")->capture_default_str();
    track->add_option("--lifespan", track_args.config.max_lifespan, "Frames a track survives unmatched")
        ->capture_default_str();
    track->add_option("--merge-radius", track_args.config.merge_radius_m, "Cross-view duplicate radius, m (0 = off)")
        ->capture_default_str();
    auto* h_body_opt = track->add_option("--h-body", track_h_body, "Body height prior, m (default: rig value)");
    track->add_option("--ema", track_args.config.embedding_ema, "Track embedding moving-average weight (0 = off)")
        ->capture_default_str();
    track->add_option("--meas-std", track_args.config.kalman.measurement_noise_std, "Kalman measurement std, m")
        ->capture_default_str();
    track->add_option("--accel-std", track_args.config.kalman.process_accel_std, "Kalman process accel std")
        ->capture_default_str();
    track->add_flag("--no-appearance", no_appearance, "Trajectory-only cost (ablation)");

    cli::EvalArgs eval_args;
    std::string loc_thresholds = "0.5,1.0,2.0";
    auto* eval = app.add_subcommand("eval", "Score tracklets against ground truth");
    eval->add_option("ground_truth", eval_args.ground_truth, "Ground-truth JSONL")->required();
    eval->add_option("predictions", eval_args.predictions, "Tracklet JSONL")->required();
    eval->add_option("--dist-threshold", eval_args.options.dist_threshold_m, "Association gate, m")
        ->capture_default_str();
    eval->add_option("--loc-thresholds", loc_thresholds, "Comma-separated precision thresholds, m")
        ->capture_default_str();
    eval->add_option("--radius", eval_args.options.eval_radius_m, "Evaluation radius around the rig, m")
        ->capture_default_str();
    eval->add_flag("--json", eval_args.json_output, "Print machine-readable JSON");
    eval->add_flag("--exclude-estimated", eval_args.exclude_estimated, "Ignore coasting (predicted) records");

    cli::SynthArgs synth_args;
    std::uint64_t seed = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
    synth->add_option("scene_config", synth_args.scene_config, "Scene config JSON")->required();
    synth->add_option("rig", synth_args.rig, "Rig JSON")->required();
    synth->add_option("out_dir", synth_args.out_dir, "Output directory")->required();
    auto* seed_opt = synth->add_option("--seed", seed, "Override the config seed");

    CLI11_PARSE(app, argc, argv);

    if (*localize) return cli::cmd_localize(localize_args, std::cerr);
    if (*track) {
        if (*h_body_opt) track_args.config.body_height_m = track_h_body;
        if (no_appearance) track_args.config.cost_mode = CostMode::kTrajectoryOnly;
        return cli::cmd_track(track_args, std::cerr);
    }
    if (*eval) {
        try {
            eval_args.options.loc_thresholds_m = parse_thresholds(loc_thresholds);
        } catch (const std::exception&) {
            std::cerr << "error: bad --loc-thresholds '" << loc_thresholds << "'\n";
            return cli::kConfigInvalid;
        }
        return cli::cmd_eval(eval_args, std::cout, std::cerr);
    }
    if (*synth) {
        if (*seed_opt) synth_args.seed = seed;
        return cli::cmd_synth(synth_args, std::cerr);
    }
    return 0;
}
